//! Error types shared across the crate.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, QtError>;

#[derive(Debug, thiserror::Error)]
pub enum QtError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("evaluation failed at sample {sample}: {source}")]
    Eval {
        sample: usize,
        #[source]
        source: Box<QtError>,
    },
}

impl QtError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        QtError::Io { path: path.into(), source }
    }

    /// Process exit code convention: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            QtError::Config(_) => 1,
            QtError::Numerical(_) => 3,
            QtError::Eval { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
