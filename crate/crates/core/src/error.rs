use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by map building, persistence, classification and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty input")]
    EmptyInput,

    #[error("empty map")]
    EmptyMap,

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Config(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic in {path}: {found:?}")]
    BadMagic { path: PathBuf, found: String },

    #[error("unsupported format version {found} (supported major {supported})")]
    UnsupportedVersion { found: String, supported: u32 },

    #[error("checksum mismatch for {file}: expected {expected}, got {actual}")]
    Checksum {
        file: String,
        expected: String,
        actual: String,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

impl Error {
    /// Short machine-parsable category, used by the command-line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::NonFinite(_) => "non-finite",
            Error::EmptyInput => "empty-input",
            Error::EmptyMap => "empty-map",
            Error::Usage(_) => "usage",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::BadMagic { .. } => "bad-magic",
            Error::UnsupportedVersion { .. } => "unsupported-version",
            Error::Checksum { .. } => "checksum",
            Error::Format { .. } => "format",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}
