use thiserror::Error;

#[derive(Debug, Error)]
pub enum BpoError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-differentiable utility: {0}")]
    NonDifferentiable(String),

    #[error("infeasible point: {0}")]
    Infeasible(String),

    #[error("negative potential {0}")]
    NegativePotential(f64),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = BpoError> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(BpoError::DimensionMismatch { expected, got })
    }
}
