use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unknown keys or unparsable values. Exit code 1.
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: soupdil::Error,
    },
    #[error(transparent)]
    Core(#[from] soupdil::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches the file path to a core error.
pub trait WithPath<T> {
    fn at(self, path: impl Into<PathBuf>) -> CliResult<T>;
}

impl<T> WithPath<T> for soupdil::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> CliResult<T> {
        self.map_err(|source| CliError::File {
            path: path.into(),
            source,
        })
    }
}
