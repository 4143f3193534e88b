use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("curve must contain at least one point")]
    EmptyCurve,

    #[error("non-finite coordinate in input")]
    NonFinite,

    #[error("invalid norm parameter p = {0} (need p >= 1)")]
    InvalidNorm(f64),

    #[error("invalid traversal: {0}")]
    InvalidTraversal(String),

    #[error("unsupported dimension {found}: {context}")]
    UnsupportedDimension { found: usize, context: &'static str },

    #[error("unsupported norm for {0}")]
    UnsupportedNorm(&'static str),

    #[error("coordinate set has {found} distinct values, bound is {bound}")]
    CoordinateSetTooLarge { found: usize, bound: usize },

    #[error("oracle size guard exceeded: {work} > {limit}")]
    GuardExceeded { work: u128, limit: u128 },

    #[error("curves are not contained in the ball of radius {0} around the origin")]
    ContainmentViolated(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
