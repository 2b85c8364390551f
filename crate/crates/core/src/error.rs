use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("matrix is not Hermitian: ||H - H^dagger||_F = {defect:e} exceeds {bound:e}")]
    NotHermitian { defect: f64, bound: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal mass {off_diagonal:e})")]
    Convergence { sweeps: usize, off_diagonal: f64 },

    #[error("phase solve failed: {0}")]
    PhaseSolve(String),

    #[error("invalid phase convention: {0}")]
    Convention(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    /// True for failures of the numerical pipeline itself, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. } | Error::PhaseSolve(_) | Error::NotHermitian { .. }
        )
    }

    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}
