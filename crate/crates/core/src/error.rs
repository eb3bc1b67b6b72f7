use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by simulation, tracking and I/O code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A numeric argument violated a precondition (non-finite, out of range).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A tracker reached a state it cannot evolve from (e.g. non-positive range).
    #[error("invalid tracker state: {0}")]
    InvalidState(String),

    /// A configuration key failed to parse or validate.
    #[error("config error for key `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// Fusion of messages that together carry no information.
    #[error("no information: {0}")]
    NoInformation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
