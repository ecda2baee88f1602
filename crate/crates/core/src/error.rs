use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Input parsed but violates a domain invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("unsupported format_version {found:?} in {path} (expected {expected:?})")]
    FormatVersion {
        path: PathBuf,
        found: String,
        expected: &'static str,
    },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("missing prerequisite artifact: {0}")]
    MissingArtifact(PathBuf),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user input rather than internal failures.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}
