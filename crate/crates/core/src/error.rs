use thiserror::Error;

/// Errors raised by coreset construction, solvers and generators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty point set")]
    EmptyPointSet,

    #[error("center set is empty")]
    EmptyCenters,

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("negative or non-finite weight {weight} at row {row}")]
    BadWeight { row: usize, weight: f64 },

    #[error("outlier mass {z} must be smaller than the total weight {total}")]
    TooManyOutliers { z: f64, total: f64 },

    #[error("cannot select {requested} items out of {available}")]
    SelectionTooLarge { requested: usize, available: usize },

    #[error("point set has no response column")]
    MissingResponse,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
