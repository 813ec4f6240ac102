use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum PlateError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("degree {degree} is out of range for {family}: {reason}")]
    DegreeOutOfRange { family: String, degree: usize, reason: String },

    #[error("family mismatch: {0}")]
    FamilyMismatch(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("rank decision ambiguous: gap ratio {gap:.3e} below 1e3, singular value tail {tail:?}")]
    RankAmbiguous { gap: f64, tail: Vec<f64> },

    #[error("eigen-solver failure: {0}")]
    Eigen(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PlateError>;
