use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Non-finite input to an activation. `index` is set for batch evaluation.
    #[error("domain error: non-finite input {value}{}", index.map(|i| format!(" at index {i}")).unwrap_or_default())]
    Domain { value: f64, index: Option<usize> },

    #[error("argument error: {0}")]
    Argument(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by dataset files (bad format or unreadable).
    pub fn is_data_error(&self) -> bool {
        matches!(self, Error::Format(_) | Error::Io(_))
    }
}
