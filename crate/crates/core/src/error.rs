use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} out of range: {value} (expected {expected})")]
    Range {
        what: &'static str,
        value: i64,
        expected: String,
    },

    #[error("parse error in {location}: {message}")]
    Parse { location: String, message: String },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the command-line front end: 1 for domain and
    /// validation failures, 2 for I/O and parse failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Range { .. } | Error::UndefinedCorrelation(_) => 1,
            Error::Parse { .. } | Error::Io { .. } => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
