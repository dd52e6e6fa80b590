//! Errors of the front end and their process exit codes.

use std::path::PathBuf;

use coulhole_core::Error as CoreError;

/// Exit code of a successful run.
pub const EXIT_OK: i32 = 0;
/// Failure outside the other classes (IO, thread pool).
pub const EXIT_FAILURE: i32 = 1;
/// Bad or missing arguments.
pub const EXIT_USAGE: i32 = 2;
/// The numerical setup cannot work (grid too coarse, bad binning).
pub const EXIT_NUMERICAL: i32 = 3;
/// A computation broke one of its own invariants.
pub const EXIT_INVARIANT: i32 = 4;

/// Everything that can stop a run.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad command line or config file.
    #[error("{0}")]
    Usage(String),
    /// Raised by the library.
    #[error(transparent)]
    Core(#[from] CoreError),
    /// A result failed a consistency check.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    /// File system access.
    #[error("{path}: {source}")]
    Io {
        /// File involved.
        path: PathBuf,
        /// Underlying error.
        source: std::io::Error,
    },
    /// Malformed or unserializable JSON.
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    /// Worker pool could not start.
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

/// Front-end result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Usage error from anything printable.
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// IO error tagged with its path.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => EXIT_USAGE,
            Error::Core(e) => match e {
                CoreError::DimensionMismatch { .. }
                | CoreError::WrongDimension { .. }
                | CoreError::UnknownUnit(_)
                | CoreError::BadQuantity(_)
                | CoreError::Domain { .. } => EXIT_USAGE,
                CoreError::UnderResolved { .. }
                | CoreError::InvalidGrid(_)
                | CoreError::InvalidConfig(_) => EXIT_NUMERICAL,
                CoreError::SingularPair
                | CoreError::DerivativeUndefined { .. }
                | CoreError::IntegrationFailed { .. }
                | CoreError::RootNotFound(_) => EXIT_INVARIANT,
            },
            Error::Invariant(_) | Error::Json(_) => EXIT_INVARIANT,
            Error::Io { .. } | Error::ThreadPool(_) => EXIT_FAILURE,
        }
    }
}
