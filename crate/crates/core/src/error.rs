use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch, expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("matrix must have at least one row and one column (got {rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("non-finite values encountered while training layer {layer}")]
    NonFiniteLayer { layer: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear system is singular")]
    Singular,

    #[error("trace is empty")]
    EmptyTrace,

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("basis function is zero on the grid")]
    ZeroBasis,

    #[error("inconsistent trainer state: {0}")]
    InconsistentState(String),

    #[error("csv line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("archive: {0}")]
    Archive(String),

    #[error("archive version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
