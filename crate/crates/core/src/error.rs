use thiserror::Error;

/// Errors produced by the change-point library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("window {start}..={end} out of bounds for a sample of {n} rows")]
    WindowOutOfBounds { start: usize, end: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("subset must be nonempty and within {d} components")]
    InvalidSubset { d: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate variance estimate ({0:e})")]
    DegenerateVariance(f64),

    #[error("degenerate series: {0}")]
    DegenerateSeries(&'static str),

    #[error("series of length {n} is too short (need at least {min})")]
    SeriesTooShort { n: usize, min: usize },

    #[error("multiplier window {ell} is not shorter than the series ({n})")]
    WindowExceedsSeries { ell: usize, n: usize },

    #[error("argument outside domain: {0}")]
    Domain(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid_param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
