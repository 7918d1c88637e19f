use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file {}", path.display())]
    MissingFile { path: PathBuf },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("malformed manifest {}: {reason}", path.display())]
    MalformedManifest { path: PathBuf, reason: String },

    #[error("size mismatch for {}: expected {expected} bytes, found {found}", path.display())]
    SizeMismatch {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("unknown {kind} `{id}`")]
    UnknownIdentifier { kind: &'static str, id: String },

    #[error("negative activation {value} at sample {sample}, row {row}, col {col}")]
    NegativeActivation {
        sample: usize,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("non-finite activation at sample {sample}, row {row}, col {col}")]
    NonFiniteActivation { sample: usize, row: usize, col: usize },

    #[error("unsupported homology degree {0} (supported: 0, 1)")]
    UnsupportedDegree(usize),

    #[error("brute-force oracle supports at most {cap} vertices, got {got}")]
    SizeCapExceeded { cap: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of the filesystem rather than of the inputs' content.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::MissingFile { .. } | Error::Io { .. })
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Error {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
