use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("zero matrix has no spectral info")]
    ZeroMatrix,

    #[error("non-finite entry at position {0}")]
    NonFinite(usize),

    #[error("degenerate distribution: every block has zero Frobenius norm")]
    DegenerateDistribution,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("selected block ({0}, {1}) has zero Frobenius norm")]
    ZeroBlock(usize, usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("stop rule needs a pseudoinverse oracle but none was supplied")]
    MissingOracle,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported Matrix Market header: {0}")]
    UnsupportedHeader(String),

    #[error("matrix {rows}x{cols} exceeds the densification cap of {cap} entries")]
    Capacity { rows: usize, cols: usize, cap: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
