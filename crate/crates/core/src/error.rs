use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("topology mismatch: expected {expected} vertices, got {actual}")]
    Topology { expected: usize, actual: usize },

    #[error("degenerate bone at joint {joint}: length {length:e} m")]
    DegenerateBone { joint: usize, length: f64 },

    #[error("expected {expected} {what}, got {actual}")]
    Arity {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for vocabulary of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("mesh is not watertight: {0}")]
    NotWatertight(String),

    #[error("not ready: {0}")]
    NotReady(String),

    #[error("non-finite loss component `{component}` ({value})")]
    NonFinite { component: &'static str, value: f64 },

    #[error("grasp generation failed after {attempts} attempts: {reason}")]
    Generation { attempts: usize, reason: String },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: String, expected: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Tensor(#[from] candle_core::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
