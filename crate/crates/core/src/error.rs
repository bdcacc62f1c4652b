use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The decision points do not form a tree hanging off the empty sequence.
    #[error("cyclic or disconnected structure at decision point {index} ({id}): {detail}")]
    CyclicStructure { index: usize, id: String, detail: String },

    #[error("decision point {index} ({id}) is claimed more than once")]
    DuplicateParentClaim { index: usize, id: String },

    #[error("decision point {index} ({id}) has no actions")]
    EmptyActionSet { index: usize, id: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at {context}: {message}")]
    ParseError { context: String, message: String },

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersionMismatch { found: u32, expected: u32 },

    #[error("coefficient {value} for block {block} (ref {ref_block}:{ref_index}) is outside [0, 1]")]
    InvalidCoefficient { block: usize, ref_block: usize, ref_index: usize, value: f64 },

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("exponent overflow in conjugate computation: {0}")]
    OverflowGuard(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("step size underflow: tau = {tau:e} after {attempts} rejected attempts")]
    StallError { tau: f64, attempts: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io { path: path.display().to_string(), message: err.to_string() }
    }
}
