use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("capacity exceeded: {what} = {value} exceeds cap {cap}")]
    Capacity { what: &'static str, value: u64, cap: u64 },

    #[error("index {index} out of range for group of order {order}")]
    IndexOutOfRange { index: usize, order: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("generator vector violates the common-ray condition: <v, 1> = {0} <= 0")]
    CommonRayViolation(f64),

    #[error("degenerate fan: {0}")]
    DegenerateFan(String),

    #[error("point is not in the strict interior of the body (gauge {0})")]
    NotInterior(f64),

    #[error("rotation matrix is not special orthogonal (defect {0:e})")]
    NotOrthogonal(f64),

    #[error("non-finite value in input: {0}")]
    NonFinite(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
