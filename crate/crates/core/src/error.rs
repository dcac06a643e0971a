use thiserror::Error;

/// Errors produced by the exact privacy engines.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} bins, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid histogram: {0}")]
    InvalidHistogram(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid rational {0:?}")]
    ParseRational(String),

    #[error("index {index} out of range for {len} bins")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid trail: {0}")]
    InvalidTrail(String),

    #[error("invalid rule: {0}")]
    InvalidRule(String),

    #[error("too many candidates: m = {0} (at most 5 supported, m! bins are enumerated)")]
    TooManyCandidates(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("output map is not defined on output {0}")]
    PartialMap(String),

    #[error("resource guard: {0}")]
    ResourceGuard(String),

    #[error("need at least two values with positive probability")]
    InsufficientSupport,
}

pub type Result<T> = std::result::Result<T, Error>;
