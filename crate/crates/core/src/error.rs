use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("config {path}: line {line}: {msg}")]
    ConfigParse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("index {index} out of range for {len} actions")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("stale cache: forward pass ran against parameter generation {cached}, parameters are at {current}")]
    StaleCache { cached: u64, current: u64 },

    #[error("non-finite value in {context}: {detail}")]
    NonFinite { context: String, detail: String },

    #[error(
        "oracle instance too large: {cost} state-action-steps exceeds {limit}; use the relaxation bound instead"
    )]
    OracleTooLarge { cost: u128, limit: u128 },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status for this error, as used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::ConfigParse { .. } => 2,
            Error::NonFinite { .. } => 3,
            Error::OracleTooLarge { .. } => 4,
            _ => 1,
        }
    }

    pub(crate) fn non_finite(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
            detail: detail.into(),
        }
    }
}
