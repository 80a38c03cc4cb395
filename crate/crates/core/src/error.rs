use thiserror::Error;

use crate::geometry::ValidationReport;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Caller supplied an argument outside the operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numerical search did not produce an answer within its budget.
    #[error("numerical failure in {operation}: {detail}")]
    Numerical { operation: &'static str, detail: String },

    /// The environment does not have the structure the operation needs.
    #[error("unsupported environment: {0}")]
    Unsupported(String),

    #[error("sphere world validation failed: {0}")]
    Validation(ValidationReport),

    #[error("zero disparity: point at infinite depth")]
    InfiniteDepth,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
