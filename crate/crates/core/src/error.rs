use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: expected {expected} bytes, found {found}")]
    SizeMismatch {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("bad file format: {0}")]
    Format(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("index {index:?} out of bounds for dims {dims:?}")]
    OutOfBounds { index: [usize; 3], dims: [usize; 3] },

    #[error("voxel {index}: {source}")]
    Voxel {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("scheme `{scheme}` cannot render a {model} volume")]
    SchemeMismatch { scheme: String, model: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
