use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid offspring law: {0}")]
    InvalidLaw(String),

    #[error("environment has {available} generations but {requested} were requested")]
    EnvironmentTooShort { available: usize, requested: usize },

    #[error("instance too large: {what} would need {needed}, cap is {cap}")]
    TooLarge { what: &'static str, needed: u128, cap: u128 },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("height mismatch: {0}")]
    HeightMismatch(String),

    #[error("invalid gauge: {0}")]
    InvalidGauge(String),

    #[error("invalid flow: {0}")]
    InvalidFlow(String),

    #[error("invalid target: {0}")]
    InvalidTarget(String),

    #[error("alphabet mismatch: expected {expected}, found {found}")]
    AlphabetMismatch { expected: u32, found: u32 },

    #[error("no ray survives the bounded-flow restriction at k = {k}")]
    EmptySupport { k: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("inequality violated: {0}")]
    Violation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
