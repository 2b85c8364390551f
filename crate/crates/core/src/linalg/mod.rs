//! Dense complex arithmetic and the Hermitian eigensolver behind Step-1.

mod eigen;
mod matrix;

pub use eigen::{
    canonicalize_phase, hermitian_eigendecompose, EigenDecomposition, DEFAULT_TOL, MAX_SWEEPS,
};
pub use matrix::{adjoint, frobenius_norm, inner, mat_mul, vector_norm, ComplexMatrix, C64};

pub(crate) use eigen::gram_schmidt;
pub(crate) use matrix::{ONE, ZERO};
