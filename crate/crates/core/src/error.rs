use thiserror::Error;

/// Errors surfaced by the solver, the learning stack and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed instance: {0}")]
    InvalidInstance(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("simplex failed to converge after {0} pivots")]
    NumericalFailure(u64),
    #[error("cut has zero norm")]
    ZeroNormCut,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value detected in {0}")]
    NonFiniteDetected(String),
    #[error("state has no candidate cuts")]
    DegenerateState,
    #[error("improvement undefined: baseline metric is zero")]
    UndefinedImprovement,
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
