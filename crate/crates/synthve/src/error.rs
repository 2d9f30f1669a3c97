use std::io;
use std::path::PathBuf;

use crate::checkpoint::CheckpointError;
use crate::store_io::FormatError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },

    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },

    #[error("{}: {source}", path.display())]
    Store { path: PathBuf, source: FormatError },

    #[error("{}: {source}", path.display())]
    Checkpoint { path: PathBuf, source: CheckpointError },

    #[error("{}:{line}: {message}", path.display())]
    Record { path: PathBuf, line: usize, message: String },

    #[error(transparent)]
    Core(#[from] synthve_core::Error),

    #[error("{0}")]
    Input(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit code: 2 for bad input or failed validation, 1 for
    /// failures while producing output.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Write { .. } | Error::Internal(_) => 1,
            _ => 2,
        }
    }
}
