use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{0}")]
    Incompatible(String),
    #[error("{0}")]
    Numerical(String),
    #[error(transparent)]
    Core(#[from] fermitraj::Error),
    #[error(transparent)]
    Stats(#[from] fermitraj_stats::StatsError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, message: impl ToString) -> Self {
        CliError::Format {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    /// 2 for usage errors, 1 for numerical failures, 3 for I/O and malformed inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Incompatible(_) => 2,
            CliError::Numerical(_) | CliError::Core(_) | CliError::Stats(_) => 1,
            CliError::Io { .. } | CliError::Format { .. } => 3,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
