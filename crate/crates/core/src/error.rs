use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error(
        "vertex enumeration needs 2^{terms} matrices (cap 2^{cap}); use the composite formulation"
    )]
    VertexExplosion { terms: usize, cap: usize },

    #[error("invalid envelope: {0}")]
    InvalidEnvelope(String),

    #[error("structure mismatch: {0}")]
    StructureMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("bracket does not straddle the feasibility boundary: lower end {lo_status}, upper end {hi_status}")]
    Bracket { lo_status: String, hi_status: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn dims(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
