use thiserror::Error;

#[derive(Debug, Error)]
pub enum GbpError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("common denominator of the item sizes does not fit the integer search")]
    ScaleOverflow,
    #[error("guess rejected: {0}")]
    GuessRejected(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GbpError>;
