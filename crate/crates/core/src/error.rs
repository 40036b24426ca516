use std::path::PathBuf;

/// Crate-wide error type. Every fallible operation returns one of these so
/// callers (CLI, FFI) can map failures to diagnostics without downcasting.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Tensor or parameter shapes disagree. The message names the offending
    /// dimension so the caller can tell which input was wrong.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A value that must be finite was NaN or infinite.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Filesystem failure, tagged with the path involved.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Image decode or encode failure.
    #[error("image error on {path}: {message}")]
    Image { path: PathBuf, message: String },

    /// Checkpoint container is malformed or inconsistent.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// Run configuration text could not be parsed.
    #[error("config error: {0}")]
    Config(String),

    /// A training procedure failed to reach its contract.
    #[error("training failed: {0}")]
    Training(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
