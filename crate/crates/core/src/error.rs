use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid detector, synthesis or sweep parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// A window that does not fit inside the trace.
    #[error("window starting at {start} with size {window_size} exceeds trace of length {len}")]
    WindowOutOfBounds {
        start: usize,
        window_size: usize,
        len: usize,
    },

    /// Input data that cannot be processed (too short, mismatched lengths, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A row of a delimited file that could not be interpreted.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the caller's parameters rather than the data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
