use thiserror::Error;

/// Errors produced by quantized-vector construction and the optimization routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vector has {found} distinct values but at most {max} are allowed")]
    TooManyUniqueValues { found: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("objective returned a non-finite {what}")]
    NonFiniteObjective { what: &'static str },

    #[error("brute-force search space of {states:e} states exceeds the limit of {limit:e}")]
    SearchSpaceTooLarge { states: f64, limit: f64 },

    #[error("invalid arity: c = {c} must satisfy 1 <= c <= d = {d}")]
    InvalidArity { c: usize, d: usize },

    #[error("trajectory has no pair of distinct points")]
    DegenerateTrajectory,

    #[error("objective does not provide {0}")]
    MissingCapability(&'static str),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
