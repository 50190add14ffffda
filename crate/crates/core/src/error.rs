use thiserror::Error;

use crate::expr::ParseError;

/// Errors raised by field construction, evaluation and the geometric checks.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("division by zero in subexpression `{expression}`")]
    DivisionByZero { expression: String },

    #[error("non-finite value produced by `{expression}`")]
    NonFinite { expression: String },

    #[error("singular metric at {point:?} (|det| = {det:e})")]
    SingularMetric { point: Vec<f64>, det: f64 },

    #[error("singular {what} matrix")]
    SingularMatrix { what: &'static str },

    #[error("invalid chart split: {0}")]
    InvalidSplit(String),

    #[error("connection is not projectable (residual {residual:e} > tolerance {tolerance:e})")]
    NotProjectable { residual: f64, tolerance: f64 },

    #[error("could only find {found} of {requested} admissible sample points")]
    Sampling { requested: usize, found: usize },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid extension data: {0}")]
    InvalidExtension(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
