use thiserror::Error;

/// Errors raised by grid construction, material evaluation and assembly.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("degenerate material at ({x}, {y}): {reason}")]
    DegenerateMaterial { x: f64, y: f64, reason: String },

    #[error("material is not dissipative: {0}")]
    NonDissipative(String),

    #[error("singular Robin coefficient: {0}")]
    SingularRobin(String),

    #[error("brute-force oracle refused: {0}")]
    OracleTooLarge(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
