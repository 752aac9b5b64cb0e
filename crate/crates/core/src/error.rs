use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid mismatch: {left} vs {right} points")]
    GridMismatch { left: usize, right: usize },
    #[error("linear solve failed: {0}")]
    Numerical(String),
    #[error("experiment failed: {0}")]
    Experiment(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
