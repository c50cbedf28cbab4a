use std::path::PathBuf;

/// Errors produced by profile construction, updating and persistence.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("corrupt state: {0}")]
    CorruptState(String),

    #[error("unsupported snapshot version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("{path}: line {line}: {message}")]
    Malformed { path: PathBuf, line: u64, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by a damaged or incompatible snapshot.
    pub fn is_snapshot_failure(&self) -> bool {
        matches!(self, Error::CorruptState(_) | Error::UnsupportedVersion { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
