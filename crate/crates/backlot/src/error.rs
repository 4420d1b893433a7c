//! Crate-wide error type.

use crate::gateway::Stage;

/// Every fallible operation in the crate reports through this enum.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // Tag codec.
    #[error("missing tag <{name}> (searched from byte {offset})")]
    MissingTag { name: String, offset: usize },
    #[error("unbalanced tag <{name}> opened at byte {offset}")]
    UnbalancedTag { name: String, offset: usize },
    #[error("tag <{name}> at byte {offset}: expected {expected}, found {found}")]
    ArityViolation {
        name: String,
        offset: usize,
        expected: String,
        found: usize,
    },

    // Domain construction and extraction.
    #[error("character cardinality out of range: {count} (expected {min}..={max})")]
    CardinalityOutOfRange { count: usize, min: usize, max: usize },
    #[error("duplicate character name: {name}")]
    DuplicateName { name: String },
    #[error("invalid plot label: {raw}")]
    InvalidLabel { raw: String },
    #[error("more than 26 subplots under top plot {top_index}")]
    SubplotOverflow { top_index: usize },
    #[error("plot label sequence gap at {label}")]
    LabelGap { label: String },
    #[error("subplot {label} has no parent top plot")]
    OrphanSubplot { label: String },
    #[error("top plot {label} has no subplots")]
    EmptyTopPlot { label: String },
    #[error("unknown character name in outline: {name}")]
    UnknownCharacterName { name: String },
    #[error("scene heading has {found} components (expected 3)")]
    ComponentCount { found: usize },
    #[error("constraint violation: {detail}")]
    ConstraintViolation { detail: String },
    #[error("performance for wrong character: expected {expected}, got {found}")]
    RoleMismatch { expected: String, found: String },
    #[error("script draft involves a character outside the subplot: {name}")]
    ForeignCharacter { name: String },
    #[error("script draft has no scene heading")]
    MissingSceneHeading,

    // Expansion ordering.
    #[error("label not in outline: {label}")]
    UnknownLabel { label: String },
    #[error("out-of-order expansion at {label}: expected {expected} prior chapters, found {found}")]
    OutOfOrderExpansion {
        label: String,
        expected: usize,
        found: usize,
    },

    // Screenplay assembly.
    #[error("no episode for subplot {label}")]
    MissingEpisode { label: String },
    #[error("duplicate episode for subplot {label}")]
    DuplicateEpisode { label: String },

    // Evaluation.
    #[error("screenplay does not cover top plot {label}")]
    CoverageGap { label: String },
    #[error("malformed verdict: {raw:?}")]
    MalformedVerdict { raw: String },
    #[error("cannot aggregate an empty result set")]
    EmptyResults,

    // Gateway.
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited by server (retry after {retry_after_secs}s)")]
    RateLimited { retry_after_secs: u64 },
    #[error("replay miss for request hash {hash}")]
    ReplayMiss { hash: String },
    #[error("structured output failed in {stage} after {attempts} attempts: {last}")]
    StructuredOutputFailure {
        stage: Stage,
        attempts: u32,
        #[source]
        last: Box<Error>,
    },

    // Pipeline.
    #[error("{stage} failed for story {story_id}")]
    StageFailure {
        stage: Stage,
        story_id: String,
        #[source]
        source: Box<Error>,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable kind, used in failure records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MissingTag { .. } => "MissingTag",
            Error::UnbalancedTag { .. } => "UnbalancedTag",
            Error::ArityViolation { .. } => "ArityViolation",
            Error::CardinalityOutOfRange { .. } => "CardinalityOutOfRange",
            Error::DuplicateName { .. } => "DuplicateName",
            Error::InvalidLabel { .. } => "InvalidLabel",
            Error::SubplotOverflow { .. } => "SubplotOverflow",
            Error::LabelGap { .. } => "LabelGap",
            Error::OrphanSubplot { .. } => "OrphanSubplot",
            Error::EmptyTopPlot { .. } => "EmptyTopPlot",
            Error::UnknownCharacterName { .. } => "UnknownCharacterName",
            Error::ComponentCount { .. } => "ComponentCount",
            Error::ConstraintViolation { .. } => "ConstraintViolation",
            Error::RoleMismatch { .. } => "RoleMismatch",
            Error::ForeignCharacter { .. } => "ForeignCharacter",
            Error::MissingSceneHeading => "MissingSceneHeading",
            Error::UnknownLabel { .. } => "UnknownLabel",
            Error::OutOfOrderExpansion { .. } => "OutOfOrderExpansion",
            Error::MissingEpisode { .. } => "MissingEpisode",
            Error::DuplicateEpisode { .. } => "DuplicateEpisode",
            Error::CoverageGap { .. } => "CoverageGap",
            Error::MalformedVerdict { .. } => "MalformedVerdict",
            Error::EmptyResults => "EmptyResults",
            Error::Transport(_) => "Transport",
            Error::RateLimited { .. } => "RateLimited",
            Error::ReplayMiss { .. } => "ReplayMiss",
            Error::StructuredOutputFailure { .. } => "StructuredOutputFailure",
            Error::StageFailure { .. } => "StageFailure",
            Error::Config(_) => "Config",
            Error::Io(_) => "Io",
        }
    }
}
