use thiserror::Error;

/// Errors produced by the generation, solving, and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("graph contains a cycle")]
    NotADag,

    #[error("loss became non-finite at iteration {iter}")]
    NonFinite { iter: usize },

    #[error("exceeded the configured time limit of {limit_s} s")]
    TimedOut { limit_s: f64 },

    #[error("{requested} nodes exceeds the exhaustive-search cap of {cap}")]
    TooLarge { requested: usize, cap: usize },

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
