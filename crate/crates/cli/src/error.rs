use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Everything a subcommand can fail with, sorted by exit code: usage and
/// I/O problems exit 2, domain errors exit 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Usage(_) | CliError::Io { .. } => 2,
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_owned(),
            source,
        }
    }

    /// A library error that was raised while handling `path`. I/O failures
    /// keep exit code 2; anything else is a domain error.
    pub fn from_lib<E>(path: &Path, e: E) -> CliError
    where
        E: std::error::Error + 'static,
    {
        let mut cur: Option<&(dyn std::error::Error + 'static)> = Some(&e);
        while let Some(err) = cur {
            if let Some(io) = err.downcast_ref::<io::Error>() {
                return CliError::Io {
                    path: path.to_owned(),
                    source: io::Error::new(io.kind(), io.to_string()),
                };
            }
            cur = err.source();
        }
        CliError::Domain(format!("{}: {e}", path.display()))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Wraps a domain error without a single file to blame.
pub fn domain<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Domain(e.to_string())
}
