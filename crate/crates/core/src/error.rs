use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
///
/// The CLI maps every variant to exit status 2 (data/format error); usage
/// errors never reach this type.
#[derive(Debug, Error)]
pub enum GtgError {
    /// Malformed or out-of-contract numeric input.
    #[error("invalid input: {0}")]
    Input(String),
    /// Parameters or labelings that cannot define a game.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A file whose contents do not match the expected layout.
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    /// Dataset does not satisfy the evaluation protocol's shape.
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, GtgError>;

impl GtgError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        GtgError::Input(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        GtgError::Config(msg.into())
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        GtgError::Format {
            path: path.into(),
            message: msg.into(),
        }
    }
}
