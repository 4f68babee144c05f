use std::path::{Path, PathBuf};

use aniso_lobe::{Error, WeightsError};
use thiserror::Error as ThisError;

/// Process exit codes; a stable contract for scripts.
pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Weights { path: PathBuf, source: WeightsError },

    /// The command ran to completion but a check it performs failed.
    #[error("check failed: {0}")]
    Check(String),

    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } | CliError::Weights { .. } => EXIT_IO,
            CliError::Check(_) => EXIT_CHECK_FAILED,
            CliError::Core(e) => match e {
                Error::InvalidInput(_) | Error::ShapeMismatch { .. } | Error::GridMismatch => EXIT_USAGE,
                Error::Io(_) | Error::Weights(_) => EXIT_IO,
                Error::Degenerate(_) | Error::NonFinite { .. } => EXIT_CHECK_FAILED,
            },
        }
    }
}
