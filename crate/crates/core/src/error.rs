use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("{path}: format error at {location}: {message}")]
    Format {
        path: String,
        location: String,
        message: String,
    },

    #[error("degenerate (zero-norm) vector for item `{0}`")]
    DegenerateVector(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("invalid stopping rule: {0}")]
    InvalidStop(String),

    #[error("invalid similarity matrix: {0}")]
    Matrix(String),

    #[error("item key mismatch: {0}")]
    Key(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse error class, used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidStop(_) | Error::InvalidConfig(_) => ErrorKind::Usage,
            Error::DegenerateVector(_) | Error::Matrix(_) | Error::Diverged(_) => ErrorKind::Numeric,
            Error::EmptyInput(_)
            | Error::Shape(_)
            | Error::Data(_)
            | Error::Format { .. }
            | Error::Key(_)
            | Error::Io { .. } => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(
        path: impl AsRef<std::path::Path>,
        location: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Format {
            path: path.as_ref().display().to_string(),
            location: location.into(),
            message: message.into(),
        }
    }
}
