use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid shape {width}x{height}: both sides must be at least 1")]
    InvalidShape { width: usize, height: usize },

    #[error("hilbert order needs a 2^n x 2^n grid, got {width}x{height}; use the gilbert order for arbitrary rectangles")]
    NotPowerOfTwoSquare { width: usize, height: usize },

    #[error("order is not a permutation of 0..{0}")]
    NotPermutation(usize),

    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: String, right: String },

    #[error("non-finite value at cell {0}")]
    NonFinite(usize),

    #[error("bias value {value} at cell {cell} is outside (-1, 1)")]
    BiasOutOfRange { cell: usize, value: f64 },

    #[error("d_model must be even and at least 2, got {0}")]
    InvalidDModel(usize),

    #[error("frequency base must be greater than 1, got {0}")]
    InvalidBase(f64),

    #[error("embedding row for cell {cell} (row {row}, col {col}) has zero norm")]
    ZeroNorm { cell: usize, row: usize, col: usize },

    #[error("bucket count must be at least 1")]
    InvalidBucketCount,

    #[error("center ({row}, {col}) lies outside the grid")]
    CenterOutOfGrid { row: usize, col: usize },

    #[error("points are collinear; orientation is undefined")]
    Collinear,

    #[error("invalid three-cell sample: {0}")]
    InvalidSample(String),

    #[error("rejection sampling exhausted {0} attempts")]
    RetryCapExceeded(usize),

    #[error("invalid objective weights: {0}")]
    InvalidWeights(String),

    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid image: {0}")]
    Image(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
