use thiserror::Error;

pub type Result<T, E = MessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MessError {
    #[error("degenerate neighborhood: {0}")]
    DegenerateNeighborhood(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("insufficient points: {param} = {requested} but only {available} available")]
    InsufficientPoints {
        param: &'static str,
        requested: usize,
        available: usize,
    },

    #[error("invalid parameter `{param}`: {reason}")]
    InvalidParameter { param: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl MessError {
    pub(crate) fn invalid(param: &'static str, reason: impl Into<String>) -> Self {
        MessError::InvalidParameter {
            param,
            reason: reason.into(),
        }
    }
}
