use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: parse error: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{location}: invalid `{field}`: {message}")]
    Validation {
        location: String,
        field: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: image decode error: {message}")]
    Image { path: PathBuf, message: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("undefined cosine: {0}")]
    UndefinedCosine(String),

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("{0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn validation(
        location: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Validation {
            location: location.into(),
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
