use std::io;
use std::path::PathBuf;

/// Errors of the file-format and command layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Error from the algorithmic core.
    #[error(transparent)]
    Core(#[from] xlpe_core::Error),
    /// An input file could not be read.
    #[error("cannot read {path}: {source}")]
    Read {
        /// Offending path.
        path: PathBuf,
        /// Underlying error.
        source: io::Error,
    },
    /// An output file could not be written.
    #[error("cannot write {path}: {source}")]
    Write {
        /// Offending path.
        path: PathBuf,
        /// Underlying error.
        source: io::Error,
    },
    /// Malformed input or invalid option.
    #[error("{0}")]
    Input(String),
}

impl Error {
    /// Process exit status: 2 for input and configuration problems, 3 for
    /// numeric or runtime failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Core(xlpe_core::Error::Diverged { .. } | xlpe_core::Error::NonFinite(_)) => 3,
            Error::Write { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn read(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Self {
        let path = path.into();
        move |source| Error::Read { path, source }
    }

    pub(crate) fn write(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Self {
        let path = path.into();
        move |source| Error::Write { path, source }
    }
}

/// Result alias using the crate [`Error`].
pub type Result<T> = std::result::Result<T, Error>;
