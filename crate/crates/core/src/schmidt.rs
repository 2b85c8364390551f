//! Schmidt decomposition of bipartite pure states.
//!
//! The amplitudes `a_jk` of `|psi> = sum_jk a_jk |j>|k>` form a `dim_a x dim_b`
//! matrix. With `(a_jk) = U D V^dagger`, the Schmidt vectors are
//! `|i_A> = sum_j U_ji |j>` (rows of `U^T`) and `|i_B> = sum_k conj(V_ki) |k>`
//! (rows of `V^dagger`), so `|psi> = sum_i sigma_i |i_A>|i_B>`.

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, ZERO};
use crate::phase_svd::{svd_with, PhaseConvention, SvdFactorization, SvdOptions};

/// Unit-modulus check used by [`local_phase_rotations`].
const UNIT_MODULUS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    dim_a: usize,
    dim_b: usize,
    amplitudes: Vec<C64>,
}

impl BipartiteState {
    /// Amplitudes in row-major `|jk>` order. Normalization is not required.
    pub fn new(dim_a: usize, dim_b: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::Dimension(format!(
                "subsystem dimensions must be positive, got ({dim_a}, {dim_b})"
            )));
        }
        if amplitudes.len() != dim_a * dim_b {
            return Err(Error::Dimension(format!(
                "({dim_a}, {dim_b}) state needs {} amplitudes, got {}",
                dim_a * dim_b,
                amplitudes.len()
            )));
        }
        if let Some(index) = amplitudes.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            dim_a,
            dim_b,
            amplitudes,
        })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// The coefficient matrix `(a_jk)`.
    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::new(self.dim_a, self.dim_b, self.amplitudes.clone())
            .expect("state invariants imply a valid matrix")
    }
}

/// Free-function form of [`BipartiteState::to_matrix`].
pub fn amplitudes_to_matrix(psi: &BipartiteState) -> ComplexMatrix {
    psi.to_matrix()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDecomposition {
    /// Nonincreasing, length `min(dim_a, dim_b)`.
    pub coefficients: Vec<f64>,
    /// `basis_a[i]` is `|i_A>` in computational coordinates (column `i` of `U`).
    pub basis_a: Vec<Vec<C64>>,
    /// `basis_b[i]` is `|i_B>`, stored already conjugated (conjugate of column `i` of `V`).
    pub basis_b: Vec<Vec<C64>>,
    pub schmidt_rank: usize,
    pub entropy_bits: f64,
}

impl SchmidtDecomposition {
    pub fn dim_a(&self) -> usize {
        self.basis_a.first().map_or(0, Vec::len)
    }

    pub fn dim_b(&self) -> usize {
        self.basis_b.first().map_or(0, Vec::len)
    }

    pub fn reconstruct_state(&self) -> Vec<C64> {
        reconstruct_state(self)
    }
}

/// Builds the Schmidt form from an existing factorization of `(a_jk)`.
pub fn from_factorization(f: &SvdFactorization) -> SchmidtDecomposition {
    let k = f.sigma.len();
    let basis_a = (0..k).map(|i| f.u.column(i)).collect();
    let basis_b = (0..k)
        .map(|i| f.v.column(i).iter().map(|z| z.conj()).collect())
        .collect();
    let coefficients = f.sigma.clone();
    SchmidtDecomposition {
        schmidt_rank: coefficients.iter().filter(|&&s| s > 0.0).count(),
        entropy_bits: entanglement_entropy_bits(&coefficients),
        coefficients,
        basis_a,
        basis_b,
    }
}

pub fn schmidt_decompose(
    psi: &BipartiteState,
    convention: PhaseConvention,
    tol: f64,
) -> Result<SchmidtDecomposition> {
    schmidt_decompose_with(psi, convention, &SvdOptions::new(tol))
}

pub fn schmidt_decompose_with(
    psi: &BipartiteState,
    convention: PhaseConvention,
    opts: &SvdOptions,
) -> Result<SchmidtDecomposition> {
    let f = svd_with(&psi.to_matrix(), convention, opts)?;
    Ok(from_factorization(&f))
}

/// `-sum p_i log2 p_i` with `p_i = sigma_i^2 / sum sigma^2`, over nonzero coefficients.
pub fn entanglement_entropy_bits(coefficients: &[f64]) -> f64 {
    let big = coefficients.iter().copied().fold(0.0, f64::max);
    if big == 0.0 {
        return 0.0;
    }
    let total: f64 = coefficients.iter().map(|s| (s / big).powi(2)).sum();
    let h: f64 = coefficients
        .iter()
        .filter(|&&s| s > 0.0)
        .map(|s| {
            let p = (s / big).powi(2) / total;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Amplitude of `|jk>` is `sum_i sigma_i basis_a[i][j] basis_b[i][k]`.
pub fn reconstruct_state(sd: &SchmidtDecomposition) -> Vec<C64> {
    let (da, db) = (sd.dim_a(), sd.dim_b());
    let mut out = vec![ZERO; da * db];
    for ((&s, a), b) in sd.coefficients.iter().zip(&sd.basis_a).zip(&sd.basis_b) {
        if s == 0.0 {
            continue;
        }
        for (j, &aj) in a.iter().enumerate() {
            let left = aj * s;
            for (k, &bk) in b.iter().enumerate() {
                out[j * db + k] += left * bk;
            }
        }
    }
    out
}

/// Applies the local phase gates `D_a^T` on subsystem A and `D_b^dagger` on B:
/// `basis_a[i] *= phase_u[i]`, `basis_b[i] *= conj(phase_v[i])`.
///
/// Term `i` of the state picks up `phase_u[i] * conj(phase_v[i])`, so the
/// reconstruction is unchanged exactly when those products are 1. Phase
/// sequences may cover every coefficient or only the leading `schmidt_rank`
/// ones; uncovered terms are left as they are.
pub fn local_phase_rotations(
    sd: &SchmidtDecomposition,
    phase_u: &[C64],
    phase_v: &[C64],
) -> Result<SchmidtDecomposition> {
    let k = sd.coefficients.len();
    for (name, phases) in [("phase_u", phase_u), ("phase_v", phase_v)] {
        if phases.len() != k && phases.len() != sd.schmidt_rank {
            return Err(Error::Convention(format!(
                "{name} has {} entries, expected {k} or the Schmidt rank {}",
                phases.len(),
                sd.schmidt_rank
            )));
        }
        if let Some(bad) = phases
            .iter()
            .find(|z| !z.is_finite() || (z.norm() - 1.0).abs() > UNIT_MODULUS_TOL)
        {
            return Err(Error::Convention(format!(
                "{name} entry {bad} is not a unit-modulus phase"
            )));
        }
    }
    if phase_u.len() != phase_v.len() {
        return Err(Error::Convention(
            "phase_u and phase_v lengths differ".into(),
        ));
    }

    let mut out = sd.clone();
    for (i, (&pu, &pv)) in phase_u.iter().zip(phase_v).enumerate() {
        for z in out.basis_a[i].iter_mut() {
            *z *= pu;
        }
        let pv = pv.conj();
        for z in out.basis_b[i].iter_mut() {
            *z *= pv;
        }
    }
    Ok(out)
}
