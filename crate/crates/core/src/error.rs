use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: expected n={expected}, found n={found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("expected a field with {expected} components, found {found}")]
    ComponentMismatch { expected: usize, found: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("dyadic index {j} outside [{min}, {max}]")]
    OutOfRange { j: i32, min: i32, max: i32 },

    #[error("time stepping failed: {0}")]
    Unstable(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
