//! Phase-consistent singular value decomposition of complex matrices and the
//! Schmidt decomposition of bipartite pure states built on it.
//!
//! A textbook SVD fixes `U` and `V` only up to one unit phase per singular
//! vector, and two matrices such as `[[1,2],[2,1]]` and `[[2,1],[1,2]]` share
//! the same `A^dagger A`, eigenvectors and singular values. Picking phases
//! carelessly gives a `U D V^dagger` that reproduces the wrong one. Here the
//! phases are measured against `A` itself: `d_j = <u_j|A|v_j>` and the unit
//! factor `d_j / |d_j|` is folded into `U`, `V`, or split between them.
//!
//! ```
//! use phasesvd::{svd, ComplexMatrix, PhaseConvention, DEFAULT_TOL};
//!
//! let a = ComplexMatrix::from_real_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
//! let f = svd(&a, PhaseConvention::AllInU, DEFAULT_TOL).unwrap();
//! assert!((f.sigma[0] - 3.0).abs() < 1e-12);
//! assert!(f.reconstruct().sub(&a).unwrap().frobenius_norm() < 1e-12);
//! ```

pub mod error;
pub mod io;
pub mod linalg;
pub mod phase_svd;
pub mod schmidt;

pub use error::{Error, Result};
pub use io::{
    emit_result, format_complex, format_matrix, format_real, parse_complex, parse_matrix,
    parse_schmidt_json, parse_state, parse_state_with_dims, parse_svd_json, Decomposition,
    OutputFormat,
};
pub use linalg::{
    adjoint, frobenius_norm, hermitian_eigendecompose, mat_mul, ComplexMatrix, EigenDecomposition,
    C64, DEFAULT_TOL,
};
pub use phase_svd::{
    build_unitaries_step1, factor_phases, rank_one_terms, reconstruct, solve_diagonal_step2,
    solve_diagonal_step2_with, svd, svd_with, ComplexDiagonal, PhaseConvention, PhaseFactors,
    Step1, Step2, SvdFactorization, SvdOptions, RESIDUAL_TOL,
};
pub use schmidt::{
    amplitudes_to_matrix, entanglement_entropy_bits, local_phase_rotations, reconstruct_state,
    schmidt_decompose, schmidt_decompose_with, BipartiteState, SchmidtDecomposition,
};
