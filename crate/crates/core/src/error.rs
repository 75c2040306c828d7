use thiserror::Error;

/// Errors produced by model construction, solving and decomposition.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid tour: {0}")]
    InvalidTour(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("unsupported city count {n}: need n >= {min}")]
    UnsupportedSize { n: usize, min: usize },

    #[error("enumeration guard: {0}")]
    EnumerationGuard(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("path budget exhausted after {0} chains")]
    PathBudget(usize),

    #[error("solution is not integral: {0}")]
    NonIntegral(String),

    #[error("integral solution does not decode to a tour: {0}")]
    InconsistentPath(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
