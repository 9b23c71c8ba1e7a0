use thiserror::Error;

/// Errors raised by the probability core and the region computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty distribution")]
    Empty,

    #[error("{context}: entry {index} is negative or not finite ({value})")]
    InvalidEntry {
        context: String,
        index: usize,
        value: f64,
    },

    #[error("{context}: probabilities sum to {sum}, expected 1")]
    NotNormalized { context: String, sum: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),

    #[error("variable sets overlap on `{0}`")]
    OverlappingVariables(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
