use thiserror::Error;

/// Errors produced by any advconf operation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("constraint parse error: {0}")]
    ConstraintParse(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("value out of domain: {0}")]
    OutOfDomain(String),

    #[error("sampling budget exceeded after {attempts} attempts ({accepted} of {requested} accepted)")]
    SamplingBudget {
        attempts: u64,
        accepted: usize,
        requested: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate training set: {0}")]
    DegenerateTrainingSet(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("non-finite gradient at iteration {0}")]
    NonFiniteGradient(usize),

    #[error("unknown scenario `{0}` (expected `band2d` or `motivlike80`)")]
    UnknownScenario(String),

    #[error("csv error: {0}")]
    Csv(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
