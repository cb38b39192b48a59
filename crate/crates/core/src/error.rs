use thiserror::Error;

/// Errors raised by the trust model kernels and their callers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrustError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dimension count must be at least 1")]
    ZeroDimensions,

    #[error("capability value {value} at index {index} is outside [0, 1]")]
    OutOfUnitRange { index: usize, value: f64 },

    #[error("parameter {name}[{index}] = {value} must be finite and > 0")]
    NonPositiveParam {
        name: &'static str,
        index: usize,
        value: f64,
    },

    #[error("belief bounds violate 0 <= lower <= upper <= 1 at dimension {index}: ({lower}, {upper})")]
    InvalidBounds { index: usize, lower: f64, upper: f64 },

    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empirical grid has no observations")]
    EmptyGrid,

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("need at least {needed} records for {folds} folds, got {actual}")]
    TooFewRecords { folds: usize, needed: usize, actual: usize },

    #[error("malformed record {participant}: {reason}")]
    MalformedRecord { participant: String, reason: String },
}

pub type Result<T> = std::result::Result<T, TrustError>;
