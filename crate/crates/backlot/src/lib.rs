//! Multi-agent screenwriting pipeline.
//!
//! The library turns a short storyline into a full screenplay in three stages:
//! plot planning (a Writer drafts characters and a hierarchical outline, an
//! Editor critiques, the Writer revises), story expansion (each sub-plot grows
//! into a chapter under a bounded context window), and screenplay generation
//! (a script draft per chapter, then character actors role-play it line by
//! line). A Plan-then-Write baseline, a storyline synthesizer, and a pairwise
//! judging harness with win-rate statistics round out the toolkit.
//!
//! Everything the model exchange touches is deterministic and offline-testable:
//! transports are pluggable (live HTTP, record, replay, mock), artifacts
//! checkpoint to a canonical tag format, and all seeded choices derive from
//! stable hashes.

pub mod error;
pub mod eval;
pub mod expansion;
pub mod gateway;
pub mod pipeline;
pub mod planning;
pub mod prompts;
pub mod screenplay;
pub mod story;
pub mod synth;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;
