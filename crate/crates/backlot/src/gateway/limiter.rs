//! Sliding-window rate limiting over an injectable clock.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

/// Time source. The system clock really sleeps; the virtual clock advances
/// instantly, which keeps offline runs fast and limiter tests deterministic.
pub trait Clock: Send + Sync {
    fn now(&self) -> Duration;
    fn sleep(&self, duration: Duration);
}

pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> SystemClock {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

pub struct VirtualClock {
    now: Mutex<Duration>,
}

impl VirtualClock {
    pub fn new() -> VirtualClock {
        VirtualClock {
            now: Mutex::new(Duration::ZERO),
        }
    }

    pub fn advance(&self, by: Duration) {
        *self.now.lock().unwrap() += by;
    }
}

impl Default for VirtualClock {
    fn default() -> Self {
        VirtualClock::new()
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> Duration {
        *self.now.lock().unwrap()
    }

    fn sleep(&self, duration: Duration) {
        self.advance(duration);
    }
}

/// Admits at most `capacity` request starts in any sliding `window`.
pub struct RateLimiter {
    capacity: usize,
    window: Duration,
    clock: Arc<dyn Clock>,
    starts: Mutex<VecDeque<Duration>>,
}

impl RateLimiter {
    pub fn new(capacity: usize, window: Duration, clock: Arc<dyn Clock>) -> RateLimiter {
        assert!(capacity > 0, "rate limiter capacity must be positive");
        RateLimiter {
            capacity,
            window,
            clock,
            starts: Mutex::new(VecDeque::new()),
        }
    }

    /// Per-minute limiter on the given clock.
    pub fn per_minute(capacity: usize, clock: Arc<dyn Clock>) -> RateLimiter {
        RateLimiter::new(capacity, Duration::from_secs(60), clock)
    }

    /// Blocks (via the clock) until a new request may begin, then records it.
    pub fn acquire(&self) {
        loop {
            let now = self.clock.now();
            let wait = {
                let mut starts = self.starts.lock().unwrap();
                while let Some(front) = starts.front() {
                    if *front + self.window <= now {
                        starts.pop_front();
                    } else {
                        break;
                    }
                }
                if starts.len() < self.capacity {
                    starts.push_back(now);
                    return;
                }
                *starts.front().unwrap() + self.window - now
            };
            self.clock.sleep(wait);
        }
    }

    /// Start times recorded so far (for tests).
    pub fn starts(&self) -> Vec<Duration> {
        self.starts.lock().unwrap().iter().copied().collect()
    }
}
