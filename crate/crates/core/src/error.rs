use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("rank mismatch: expected rank {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },

    /// The requested quantity depends on letters beyond the known depth.
    #[error("insufficient depth: need {needed} letters, have {available}")]
    InsufficientDepth { needed: usize, available: usize },

    #[error("horospheres meet only even radii, got radius {0}")]
    EvenRadiusRequired(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("incompatible pair: {0}")]
    IncompatiblePair(String),

    #[error("resource cap exceeded: {what} needs {size} entries, cap is {cap}")]
    ResourceCap { what: &'static str, size: u128, cap: u128 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("action violation: generator a{generator} at point {point}: {reason}")]
    ActionViolation { generator: usize, point: usize, reason: String },

    #[error("invalid relation: {0}")]
    InvalidRelation(String),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, column, message: message.into() }
    }

    pub(crate) fn depth(needed: usize, available: usize) -> Self {
        Error::InsufficientDepth { needed, available }
    }
}
