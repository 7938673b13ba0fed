use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Nn(#[from] nnkernel::NnError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed input file; `line` is 1-based.
    #[error("{file}:{line}: {msg}")]
    Format { file: String, line: usize, msg: String },
    #[error("invalid input: {0}")]
    Validation(String),
    /// Artifacts that were produced for different (C, N, m, grid) settings.
    #[error("incompatible: {0}")]
    Incompatible(String),
    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn incompatible(msg: impl Into<String>) -> Self {
        Error::Incompatible(msg.into())
    }

    /// Process exit code for the CLI: 3 for incompatibility, 2 for every
    /// other validation-type failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Incompatible(_) => 3,
            _ => 2,
        }
    }
}
