use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NzError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid triangulation: {0}")]
    Triangulation(String),
    #[error("precision of {0} digits is not supported (1..=30)")]
    Precision(u32),
    #[error("solver did not converge: {0}")]
    NoConvergence(String),
    #[error("singular jacobian")]
    Singular,
    #[error("degenerate shape: {0}")]
    Degenerate(String),
    #[error("slope too small: {0}")]
    SlopeTooSmall(String),
    #[error("not half-symplectic: {0}")]
    NotHalfSymplectic(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = NzError> = std::result::Result<T, E>;
