//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("dataset contains no records")]
    EmptyDataset,

    #[error("{kind} id {id} is missing from the dataset index")]
    IndexMissing { kind: &'static str, id: u32 },

    #[error("{kind} id {id} is not part of the training index")]
    UnknownId { kind: &'static str, id: u32 },

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("index {index} out of range for {context} of size {size}")]
    IndexOutOfRange {
        index: usize,
        size: usize,
        context: &'static str,
    },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("eigensolver did not converge within the iteration cap")]
    EigensolverNoConvergence,

    #[error("degenerate features: {0}")]
    DegenerateFeatures(String),

    #[error("neighborhood is empty")]
    EmptyNeighborhood,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid format: {0}")]
    InvalidFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
