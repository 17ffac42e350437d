use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("bad graph file: {0}")]
    Format(String),

    #[error("hash table full after probing {capacity} slots")]
    Capacity { capacity: usize },

    #[error("global id {0} is not in the id map")]
    NotFound(u64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by bad user input rather than by the
    /// environment or an internal failure.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Validation(_) | Error::Config(_) | Error::NotFound(_)
        )
    }
}
