//! Model gateway: request types, pluggable transports, rate limiting,
//! structured-output retries, and failure accounting.
//!
//! Callers see a plain blocking call-and-return contract. Every transport
//! implements [`Backend`]; the built-in ones (live HTTP, record, replay,
//! mock) are registered by name in [`BackendRegistry`] and selected from
//! config or the CLI.

pub mod backend;
pub mod cassette;
pub mod failure;
pub mod limiter;
pub mod mock;

use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::story::tags::{parse_tag_document, TagDocument, TagSchema};
use crate::story::word_count;
use crate::Result;

pub use backend::{Backend, BackendContext, BackendRegistry, LiveBackend, RecordBackend, ReplayBackend};
pub use cassette::{load_cassette, request_hash, wire_body, CassetteRecord, CassetteWriter};
pub use failure::{FailureLog, FailureRecord, StageFailureRecord};
pub use limiter::{Clock, RateLimiter, SystemClock, VirtualClock};
pub use mock::{FnBackend, MockBackend, ScriptedBackend};

/// Pipeline stage, used for failure accounting and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Planning,
    Expansion,
    Screenplay,
    Eval,
    Synth,
}

impl Stage {
    pub fn all() -> [Stage; 5] {
        [
            Stage::Planning,
            Stage::Expansion,
            Stage::Screenplay,
            Stage::Eval,
            Stage::Synth,
        ]
    }

    /// Column label used in failure-rate tables.
    pub fn table_name(&self) -> &'static str {
        match self {
            Stage::Planning => "Stage-1",
            Stage::Expansion => "Stage-2",
            Stage::Screenplay => "Stage-3",
            Stage::Eval => "Eval",
            Stage::Synth => "Synth",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Planning => "Stage-1 planning",
            Stage::Expansion => "Stage-2 expansion",
            Stage::Screenplay => "Stage-3 screenplay",
            Stage::Eval => "evaluation",
            Stage::Synth => "synthesis",
        };
        f.write_str(name)
    }
}

/// Sampling parameters for one role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub model_id: String,
    pub temperature: f64,
    pub top_p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl GenParams {
    pub fn new(model_id: impl Into<String>, temperature: f64, top_p: f64) -> Result<GenParams> {
        let params = GenParams {
            model_id: model_id.into(),
            temperature,
            top_p,
            max_tokens: None,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.model_id.trim().is_empty() {
            return Err(Error::Config("model_id is empty".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(Error::Config(format!(
                "temperature {} outside 0..=2",
                self.temperature
            )));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(Error::Config(format!("top_p {} outside (0, 1]", self.top_p)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

/// One conversation turn (the system prompt is carried separately).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub content: String,
}

impl Turn {
    pub fn user(content: impl Into<String>) -> Turn {
        Turn {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Turn {
        Turn {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// A complete chat request: system prompt plus alternating turns starting
/// with a user turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub params: GenParams,
    pub system: String,
    pub turns: Vec<Turn>,
}

impl ChatRequest {
    pub fn new(params: GenParams, system: impl Into<String>, turns: Vec<Turn>) -> Result<ChatRequest> {
        let req = ChatRequest {
            params,
            system: system.into(),
            turns,
        };
        req.validate()?;
        Ok(req)
    }

    /// Single user turn convenience.
    pub fn user(params: GenParams, system: impl Into<String>, content: impl Into<String>) -> ChatRequest {
        ChatRequest {
            params,
            system: system.into(),
            turns: vec![Turn::user(content)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, turn) in self.turns.iter().enumerate() {
            let expected = if i % 2 == 0 { Role::User } else { Role::Assistant };
            if turn.role != expected {
                return Err(Error::ConstraintViolation {
                    detail: format!("turn {i} must be {expected:?}: turns alternate starting with user"),
                });
            }
        }
        Ok(())
    }

    /// Append an assistant reply and a follow-up user turn, preserving
    /// alternation.
    pub fn extend_exchange(&mut self, assistant: impl Into<String>, user: impl Into<String>) {
        self.turns.push(Turn::assistant(assistant));
        self.turns.push(Turn::user(user));
    }

    fn ends_with_user(&self) -> bool {
        self.turns.last().map(|t| t.role == Role::User).unwrap_or(false)
    }
}

/// Totals for cost reporting: model exchanges are metered by volume, not
/// provider billing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Volume {
    pub requests: u64,
    pub completion_words: u64,
}

/// The calling surface every stage goes through.
pub struct Gateway {
    backend: Arc<dyn Backend>,
    limiter: RateLimiter,
    failures: Arc<FailureLog>,
    volume: Mutex<Volume>,
}

impl Gateway {
    pub fn new(backend: Arc<dyn Backend>, limiter: RateLimiter, failures: Arc<FailureLog>) -> Gateway {
        Gateway {
            backend,
            limiter,
            failures,
            volume: Mutex::new(Volume::default()),
        }
    }

    pub fn backend_name(&self) -> &'static str {
        self.backend.name()
    }

    pub fn failures(&self) -> &Arc<FailureLog> {
        &self.failures
    }

    pub fn volume(&self) -> Volume {
        *self.volume.lock().unwrap()
    }

    /// One blocking completion. Waits for rate-limit clearance first.
    pub fn complete(&self, req: &ChatRequest) -> Result<String> {
        req.validate()?;
        if !req.ends_with_user() {
            return Err(Error::ConstraintViolation {
                detail: "request must end with a user turn".into(),
            });
        }
        self.limiter.acquire();
        let reply = self.backend.complete(req)?;
        let mut v = self.volume.lock().unwrap();
        v.requests += 1;
        v.completion_words += word_count(&reply) as u64;
        Ok(reply)
    }

    /// Completion that must parse against `schema`. On a parse failure the
    /// identical request is re-issued, up to `max_retries` extra attempts;
    /// each failed attempt is logged.
    pub fn complete_structured(
        &self,
        req: &ChatRequest,
        schema: &TagSchema,
        max_retries: u32,
        stage: Stage,
        story_id: &str,
    ) -> Result<TagDocument> {
        self.complete_extract(req, schema, max_retries, stage, story_id, |doc| Ok(doc.clone()))
    }

    /// Like [`Gateway::complete_structured`] but also runs a typed extractor;
    /// extraction failures consume the same retry budget as parse failures.
    pub fn complete_extract<T>(
        &self,
        req: &ChatRequest,
        schema: &TagSchema,
        max_retries: u32,
        stage: Stage,
        story_id: &str,
        extract: impl Fn(&TagDocument) -> Result<T>,
    ) -> Result<T> {
        let mut attempts: u32 = 0;
        loop {
            attempts += 1;
            let text = self.complete(req)?;
            match parse_tag_document(&text, schema).and_then(|doc| extract(&doc)) {
                Ok(value) => return Ok(value),
                Err(err) => {
                    self.failures.record_attempt(FailureRecord {
                        stage,
                        attempt: attempts,
                        error_kind: err.kind().to_string(),
                        story_id: story_id.to_string(),
                    });
                    if attempts > max_retries {
                        return Err(Error::StructuredOutputFailure {
                            stage,
                            attempts,
                            last: Box::new(err),
                        });
                    }
                }
            }
        }
    }
}
