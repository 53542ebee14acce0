use std::path::Path;

use thiserror::Error;

/// Workbench failures, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, unreadable input or malformed file: exit 2.
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("{0}")]
    Input(String),
    /// The analysis itself failed: exit 1.
    #[error("{0}")]
    Pipeline(igame_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BadConfig(_) | CliError::Input(_) => 2,
            CliError::Pipeline(_) | CliError::Io { .. } => 1,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::BadConfig(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<igame_core::Error> for CliError {
    fn from(e: igame_core::Error) -> Self {
        match e {
            igame_core::Error::Parse { .. } => CliError::Input(e.to_string()),
            other => CliError::Pipeline(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
