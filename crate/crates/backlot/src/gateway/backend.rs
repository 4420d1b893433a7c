//! Transport backends and their by-name registry.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::error::Error;
use crate::gateway::cassette::{load_cassette, request_hash, wire_body, CassetteWriter};
use crate::gateway::mock::MockBackend;
use crate::gateway::ChatRequest;
use crate::Result;

/// A chat-completion transport. Implementations must be safe to share across
/// threads; the gateway serializes calls per run anyway.
pub trait Backend: Send + Sync {
    fn name(&self) -> &'static str;
    fn complete(&self, req: &ChatRequest) -> Result<String>;
}

/// Default endpoint when LLM_BASE_URL is not set.
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

/// Real HTTP transport. Reads LLM_API_KEY and LLM_BASE_URL, POSTs the wire
/// body to `{base}/chat/completions`, retries once on transport faults and
/// honors one Retry-After pause on 429 before surfacing RateLimited.
pub struct LiveBackend {
    client: reqwest::blocking::Client,
    url: String,
    api_key: String,
}

impl LiveBackend {
    pub fn from_env() -> Result<LiveBackend> {
        let api_key = std::env::var("LLM_API_KEY").map_err(|_| {
            Error::Config("LLM_API_KEY is not set (required by the live backend)".into())
        })?;
        let base_url =
            std::env::var("LLM_BASE_URL").unwrap_or_else(|_| DEFAULT_BASE_URL.to_string());
        LiveBackend::new(&base_url, api_key)
    }

    pub fn new(base_url: &str, api_key: impl Into<String>) -> Result<LiveBackend> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| Error::Transport(format!("client construction: {e}")))?;
        Ok(LiveBackend {
            client,
            url: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            api_key: api_key.into(),
        })
    }

    fn post(&self, body: &serde_json::Value) -> Result<String> {
        let response = self
            .client
            .post(&self.url)
            .bearer_auth(&self.api_key)
            .json(body)
            .send()
            .map_err(|e| Error::Transport(e.to_string()))?;
        let status = response.status();
        if status.as_u16() == 429 {
            let retry_after_secs = response
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.parse::<u64>().ok())
                .unwrap_or(2);
            return Err(Error::RateLimited { retry_after_secs });
        }
        if !status.is_success() {
            let body = response.text().unwrap_or_default();
            return Err(Error::Transport(format!("HTTP {status}: {body}")));
        }
        let json: serde_json::Value = response
            .json()
            .map_err(|e| Error::Transport(format!("response body: {e}")))?;
        json["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::Transport("malformed completion response".into()))
    }
}

impl Backend for LiveBackend {
    fn name(&self) -> &'static str {
        "live"
    }

    fn complete(&self, req: &ChatRequest) -> Result<String> {
        let body = wire_body(req);
        match self.post(&body) {
            Ok(reply) => Ok(reply),
            Err(Error::RateLimited { retry_after_secs }) => {
                std::thread::sleep(Duration::from_secs(retry_after_secs.min(120)));
                self.post(&body)
            }
            Err(Error::Transport(first)) => self
                .post(&body)
                .map_err(|e| Error::Transport(format!("{e} (after first failure: {first})"))),
            Err(other) => Err(other),
        }
    }
}

/// Wraps any transport and appends every exchange to a cassette.
pub struct RecordBackend {
    inner: Arc<dyn Backend>,
    writer: Mutex<CassetteWriter>,
}

impl RecordBackend {
    pub fn new(inner: Arc<dyn Backend>, cassette_path: &Path) -> Result<RecordBackend> {
        Ok(RecordBackend {
            inner,
            writer: Mutex::new(CassetteWriter::create(cassette_path)?),
        })
    }
}

impl Backend for RecordBackend {
    fn name(&self) -> &'static str {
        "record"
    }

    fn complete(&self, req: &ChatRequest) -> Result<String> {
        let reply = self.inner.complete(req)?;
        self.writer.lock().unwrap().append(req, &reply)?;
        Ok(reply)
    }
}

/// Serves responses from a cassette by request hash; identical requests get
/// identical responses.
pub struct ReplayBackend {
    responses: HashMap<String, String>,
}

impl ReplayBackend {
    pub fn load(cassette_path: &Path) -> Result<ReplayBackend> {
        Ok(ReplayBackend {
            responses: load_cassette(cassette_path)?,
        })
    }

    pub fn from_map(responses: HashMap<String, String>) -> ReplayBackend {
        ReplayBackend { responses }
    }
}

impl Backend for ReplayBackend {
    fn name(&self) -> &'static str {
        "replay"
    }

    fn complete(&self, req: &ChatRequest) -> Result<String> {
        let hash = request_hash(req);
        self.responses
            .get(&hash)
            .cloned()
            .ok_or(Error::ReplayMiss { hash })
    }
}

/// Everything a backend factory may need.
#[derive(Debug, Clone, Default)]
pub struct BackendContext {
    pub seed: u64,
    pub cassette_path: Option<PathBuf>,
}

impl BackendContext {
    fn cassette(&self, backend: &str) -> Result<&Path> {
        self.cassette_path.as_deref().ok_or_else(|| {
            Error::Config(format!("backend {backend:?} needs a cassette path"))
        })
    }
}

pub type BackendFactory = fn(&BackendContext) -> Result<Arc<dyn Backend>>;

/// By-name backend selection. `builtin()` registers live, record, replay and
/// mock; callers may register more.
pub struct BackendRegistry {
    entries: Vec<(&'static str, BackendFactory)>,
}

impl BackendRegistry {
    pub fn empty() -> BackendRegistry {
        BackendRegistry { entries: Vec::new() }
    }

    pub fn builtin() -> BackendRegistry {
        let mut registry = BackendRegistry::empty();
        registry.register("live", |_ctx| Ok(Arc::new(LiveBackend::from_env()?)));
        registry.register("record", |ctx| {
            let inner = Arc::new(LiveBackend::from_env()?);
            Ok(Arc::new(RecordBackend::new(inner, ctx.cassette("record")?)?))
        });
        registry.register("replay", |ctx| {
            Ok(Arc::new(ReplayBackend::load(ctx.cassette("replay")?)?))
        });
        registry.register("mock", |ctx| Ok(Arc::new(MockBackend::new(ctx.seed))));
        registry
    }

    /// Register or replace a backend factory.
    pub fn register(&mut self, name: &'static str, factory: BackendFactory) {
        if let Some(entry) = self.entries.iter_mut().find(|(n, _)| *n == name) {
            entry.1 = factory;
        } else {
            self.entries.push((name, factory));
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn create(&self, name: &str, ctx: &BackendContext) -> Result<Arc<dyn Backend>> {
        let factory = self
            .entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| f)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown backend {name:?} (available: {})",
                    self.names().join(", ")
                ))
            })?;
        factory(ctx)
    }
}
