//! Phase-consistent singular value decomposition.
//!
//! The decomposition runs in three steps:
//!
//! 1. [`build_unitaries_step1`]: `U0` and `V0` are the canonicalized
//!    eigenvectors of `A A^dagger` and `A^dagger A`, ordered by nonincreasing
//!    eigenvalue. Their phases are arbitrary.
//! 2. [`solve_diagonal_step2`]: the complex diagonal `D0` with
//!    `U0 D0 V0^dagger = A`, entry by entry `d_j = <u_j|A|v_j>`.
//! 3. [`factor_phases`]: `d_j = sigma_j e^{i(alpha_j + beta_j)}` is split into
//!    `D_a D D_b^dagger` according to a [`PhaseConvention`], and the phase
//!    diagonals are folded into `U = U0 D_a`, `V = V0 D_b`.
//!
//! [`svd`] composes the three. Because `d_j` is measured against the actual
//! matrix, `U D V^dagger` always reproduces `A`, not merely some matrix with
//! the same `A^dagger A`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{
    gram_schmidt, hermitian_eigendecompose, inner, ComplexMatrix, C64, DEFAULT_TOL, ONE, ZERO,
};

/// Relative reconstruction residual accepted after Step-2.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Allowed unitarity defect per dimension for caller-supplied `U0`/`V0`.
const UNITARY_SLACK: f64 = 1e-10;

/// How the phase `d_j / |d_j|` is divided between `U` and `V`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum PhaseConvention {
    /// All phase in `U`; `V = V0`.
    #[default]
    AllInU,
    /// All phase in `V` (column factor `conj(d_j)/|d_j|`); `U = U0`.
    AllInV,
    /// `alpha_j = beta_j = arg(d_j) / 2`.
    HalfHalf,
    /// Explicit `alpha_j` per nonzero singular value, `beta_j = arg(d_j) - alpha_j`.
    CustomAlphas(Vec<f64>),
}

impl PhaseConvention {
    /// Short name used by the CLI and the serialized formats.
    pub fn label(&self) -> &'static str {
        match self {
            PhaseConvention::AllInU => "u",
            PhaseConvention::AllInV => "v",
            PhaseConvention::HalfHalf => "split",
            PhaseConvention::CustomAlphas(_) => "custom",
        }
    }

    /// The three conventions that need no extra data.
    pub fn named() -> [PhaseConvention; 3] {
        [
            PhaseConvention::AllInU,
            PhaseConvention::AllInV,
            PhaseConvention::HalfHalf,
        ]
    }
}

impl fmt::Display for PhaseConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PhaseConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u" => Ok(PhaseConvention::AllInU),
            "v" => Ok(PhaseConvention::AllInV),
            "split" => Ok(PhaseConvention::HalfHalf),
            other => Err(Error::Convention(format!(
                "unknown convention '{other}' (expected u, v or split)"
            ))),
        }
    }
}

/// The complex diagonal `D0`; entries are the `d_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexDiagonal(pub Vec<C64>);

impl ComplexDiagonal {
    pub fn entries(&self) -> &[C64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.0.windows(2).all(|w| w[0].norm() >= w[1].norm())
    }
}

/// Tolerances for [`svd_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdOptions {
    /// Relative tolerance for the eigensolver and degeneracy detection.
    pub tol: f64,
    /// `d_j` is zeroed when `sigma_j < rank_tol * sigma_0`.
    pub rank_tol: f64,
}

impl SvdOptions {
    /// One knob: `rank_tol` follows `tol`.
    pub fn new(tol: f64) -> Self {
        Self { tol, rank_tol: tol }
    }

    pub fn with_rank_tol(mut self, rank_tol: f64) -> Self {
        self.rank_tol = rank_tol;
        self
    }

    fn validate(&self) -> Result<()> {
        for (name, value) in [("tol", self.tol), ("rank_tol", self.rank_tol)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Dimension(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self::new(DEFAULT_TOL)
    }
}

/// Output of Step-1.
#[derive(Debug, Clone, PartialEq)]
pub struct Step1 {
    pub u0: ComplexMatrix,
    pub v0: ComplexMatrix,
    /// Leading `min(m, n)` eigenvalues, clamped at zero.
    pub sigma_sq: Vec<f64>,
}

/// Output of Step-2.
#[derive(Debug, Clone, PartialEq)]
pub struct Step2 {
    pub d: ComplexDiagonal,
    /// `U0`, except inside degenerate blocks where the block rotation has been absorbed.
    pub u0_adj: ComplexMatrix,
}

/// Phase split produced by [`factor_phases`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFactors {
    /// Diagonal of `D_a`, the `e^{i alpha_j}`.
    pub phase_u: Vec<C64>,
    pub sigma: Vec<f64>,
    /// Diagonal of `D_b`, the `e^{-i beta_j}`.
    pub phase_v: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactorization {
    /// `m x m`, equal to `U0 D_a`.
    pub u: ComplexMatrix,
    /// Nonincreasing, length `min(m, n)`.
    pub sigma: Vec<f64>,
    /// `n x n`, equal to `V0 D_b`.
    pub v: ComplexMatrix,
    pub d: ComplexDiagonal,
    pub phase_u: Vec<C64>,
    pub phase_v: Vec<C64>,
    pub convention: PhaseConvention,
    /// `||U D V^dagger - A||_F`.
    pub residual: f64,
}

impl SvdFactorization {
    pub fn rows(&self) -> usize {
        self.u.rows()
    }

    pub fn cols(&self) -> usize {
        self.v.rows()
    }

    /// The `m x n` real diagonal `D`.
    pub fn d_matrix(&self) -> ComplexMatrix {
        let diag: Vec<C64> = self.sigma.iter().map(|&s| C64::new(s, 0.0)).collect();
        ComplexMatrix::from_diagonal(self.rows(), self.cols(), &diag)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        reconstruct(self)
    }

    pub fn rank_one_terms(&self) -> Vec<ComplexMatrix> {
        rank_one_terms(self)
    }

    /// Number of nonzero singular values.
    pub fn rank(&self) -> usize {
        self.sigma.iter().filter(|&&s| s > 0.0).count()
    }
}

/// Step-1: eigenvectors of `A A^dagger` and `A^dagger A`, phases disregarded.
pub fn build_unitaries_step1(a: &ComplexMatrix, tol: f64) -> Result<Step1> {
    let aah = a.mat_mul(&a.adjoint())?;
    let aha = a.adjoint_mul(a)?;
    let left = hermitian_eigendecompose(&aah, tol)?;
    let right = hermitian_eigendecompose(&aha, tol)?;

    let k = a.rows().min(a.cols());
    let smaller = if a.rows() <= a.cols() { &left } else { &right };
    let sigma_sq = smaller.eigenvalues[..k]
        .iter()
        .map(|&l| l.max(0.0))
        .collect();

    Ok(Step1 {
        u0: left.eigenvectors,
        v0: right.eigenvectors,
        sigma_sq,
    })
}

/// Step-2 with the default rank cutoff (`rank_tol = tol`).
pub fn solve_diagonal_step2(
    a: &ComplexMatrix,
    u0: &ComplexMatrix,
    v0: &ComplexMatrix,
    tol: f64,
) -> Result<Step2> {
    solve_diagonal_step2_with(a, u0, v0, &SvdOptions::new(tol))
}

/// Step-2: `d_j = <u_j|A|v_j>`.
///
/// Columns of `U0` and `V0` are expected to be paired by eigenvalue order.
/// Where singular values coincide, the eigenvectors of `A A^dagger` and
/// `A^dagger A` are not paired one-to-one and `B = U0_g^dagger A V0_g` is a
/// full block `sigma W` with `W` unitary. That rotation is absorbed into the
/// `U` columns of the block (`U0_g <- U0_g B / sigma`) and the block's `d_j`
/// become the real column norms of `B`.
pub fn solve_diagonal_step2_with(
    a: &ComplexMatrix,
    u0: &ComplexMatrix,
    v0: &ComplexMatrix,
    opts: &SvdOptions,
) -> Result<Step2> {
    opts.validate()?;
    let (m, n) = (a.rows(), a.cols());
    if u0.rows() != m || u0.cols() != m || v0.rows() != n || v0.cols() != n {
        return Err(Error::Dimension(format!(
            "U0 must be {m}x{m} and V0 {n}x{n} for a {m}x{n} matrix, got {}x{} and {}x{}",
            u0.rows(),
            u0.cols(),
            v0.rows(),
            v0.cols()
        )));
    }
    for (name, q) in [("U0", u0), ("V0", v0)] {
        let defect = q.unitarity_defect();
        if defect > UNITARY_SLACK * q.rows() as f64 {
            return Err(Error::PhaseSolve(format!(
                "{name} is not unitary (defect {defect:e})"
            )));
        }
    }

    let k = m.min(n);
    let norm_a = a.frobenius_norm();
    let av = a.mat_mul(v0)?;
    let coupling = u0.adjoint_mul(&av)?;

    // sigma_j estimated from ||A v_j||, which does not depend on the U side.
    let sigma_hat: Vec<f64> = (0..k)
        .map(|j| (0..m).map(|i| av[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let sigma_max = sigma_hat.iter().copied().fold(0.0, f64::max);

    let mut u_adj = u0.clone();
    let mut d = vec![ZERO; k];
    if sigma_max == 0.0 {
        return Ok(Step2 {
            d: ComplexDiagonal(d),
            u0_adj: u_adj,
        });
    }

    let cutoff = opts.rank_tol * sigma_max;
    let active: Vec<bool> = sigma_hat.iter().map(|&s| s >= cutoff).collect();
    let blocks = degenerate_blocks(&coupling, &sigma_hat, &active, norm_a, sigma_max, opts.tol);

    for block in &blocks {
        if block.len() == 1 {
            let j = block[0];
            d[j] = if active[j] { coupling[(j, j)] } else { ZERO };
            continue;
        }
        let mut columns = Vec::with_capacity(block.len());
        for &l in block {
            let mut w = vec![ZERO; m];
            for &i in block {
                let b = coupling[(i, l)];
                for (r, x) in w.iter_mut().enumerate() {
                    *x += u0[(r, i)] * b;
                }
            }
            let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for x in w.iter_mut() {
                *x /= norm;
            }
            d[l] = C64::new(norm, 0.0);
            columns.push(w);
        }
        gram_schmidt(&mut columns);
        for (&l, col) in block.iter().zip(&columns) {
            u_adj.set_column(l, col);
        }
    }

    let residual = residual_of(a, &u_adj, &d, v0);
    let bound = RESIDUAL_TOL.max(opts.tol) * norm_a;
    if residual > bound {
        return Err(Error::PhaseSolve(format!(
            "U0 D0 V0^dagger misses A by {residual:e} (bound {bound:e}); \
             U0 and V0 columns are not consistently paired"
        )));
    }

    Ok(Step2 {
        d: ComplexDiagonal(d),
        u0_adj: u_adj,
    })
}

/// Groups indices whose singular values agree to `sqrt(tol) * sigma_max` and
/// whose `U0`/`V0` columns are coupled above `tol * ||A||_F`. Blocks come back
/// in increasing index order.
fn degenerate_blocks(
    coupling: &ComplexMatrix,
    sigma_hat: &[f64],
    active: &[bool],
    norm_a: f64,
    sigma_max: f64,
    tol: f64,
) -> Vec<Vec<usize>> {
    let k = sigma_hat.len();
    let link_tol = tol * norm_a;
    let window = tol.sqrt() * sigma_max;

    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for j in 0..k {
        for l in (j + 1)..k {
            if !(active[j] && active[l]) || (sigma_hat[j] - sigma_hat[l]).abs() > window {
                continue;
            }
            if coupling[(j, l)].norm() > link_tol || coupling[(l, j)].norm() > link_tol {
                let (rj, rl) = (find(&mut parent, j), find(&mut parent, l));
                parent[rj.max(rl)] = rj.min(rl);
            }
        }
    }

    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; k];
    for j in 0..k {
        let root = find(&mut parent, j);
        if slot[root] == usize::MAX {
            slot[root] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[root]].push(j);
    }
    blocks
}

fn residual_of(a: &ComplexMatrix, u: &ComplexMatrix, d: &[C64], v: &ComplexMatrix) -> f64 {
    let approx = sum_of_terms(a.rows(), a.cols(), d, u, v);
    approx.sub(a).expect("shapes agree").frobenius_norm()
}

/// `sum_j weight_j |u_j><v_j|`.
fn sum_of_terms(
    m: usize,
    n: usize,
    weights: &[C64],
    u: &ComplexMatrix,
    v: &ComplexMatrix,
) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(m, n);
    for (j, &w) in weights.iter().enumerate() {
        if w == ZERO {
            continue;
        }
        for r in 0..m {
            let left = u[(r, j)] * w;
            for c in 0..n {
                out[(r, c)] += left * v[(c, j)].conj();
            }
        }
    }
    out
}

/// Splits each `d_j` into `sigma_j`, `e^{i alpha_j}` and `e^{-i beta_j}`.
///
/// For every nonzero `d_j`, `phase_u[j] * conj(phase_v[j]) == d_j / |d_j|`.
/// Zero entries get unit phases on both sides.
pub fn factor_phases(d: &ComplexDiagonal, convention: &PhaseConvention) -> Result<PhaseFactors> {
    let nonzero = d.0.iter().filter(|z| **z != ZERO).count();
    if let PhaseConvention::CustomAlphas(alphas) = convention {
        if alphas.len() != nonzero {
            return Err(Error::Convention(format!(
                "CustomAlphas has {} angles but there are {nonzero} nonzero singular values",
                alphas.len()
            )));
        }
        if let Some(bad) = alphas.iter().find(|a| !a.is_finite()) {
            return Err(Error::Convention(format!("non-finite alpha {bad}")));
        }
    }

    let mut phase_u = Vec::with_capacity(d.len());
    let mut phase_v = Vec::with_capacity(d.len());
    let mut sigma = Vec::with_capacity(d.len());
    let mut next_alpha = 0;
    for &dj in &d.0 {
        let s = dj.norm();
        sigma.push(s);
        if dj == ZERO {
            phase_u.push(ONE);
            phase_v.push(ONE);
            continue;
        }
        let p = dj / s;
        // +0.0 folds a negative zero so arg(-1) is pi, not -pi.
        let p = C64::new(p.re + 0.0, p.im + 0.0);
        let (pu, pv) = match convention {
            PhaseConvention::AllInU => (p, ONE),
            PhaseConvention::AllInV => (ONE, p.conj()),
            PhaseConvention::HalfHalf => {
                let half = p.sqrt();
                (half, half.conj())
            }
            PhaseConvention::CustomAlphas(alphas) => {
                let alpha = alphas[next_alpha];
                next_alpha += 1;
                let beta = p.arg() - alpha;
                (C64::from_polar(1.0, alpha), C64::from_polar(1.0, -beta))
            }
        };
        phase_u.push(pu);
        phase_v.push(pv);
    }
    Ok(PhaseFactors {
        phase_u,
        sigma,
        phase_v,
    })
}

/// Phase-consistent SVD with default options at relative tolerance `tol`.
pub fn svd(a: &ComplexMatrix, convention: PhaseConvention, tol: f64) -> Result<SvdFactorization> {
    svd_with(a, convention, &SvdOptions::new(tol))
}

pub fn svd_with(
    a: &ComplexMatrix,
    convention: PhaseConvention,
    opts: &SvdOptions,
) -> Result<SvdFactorization> {
    opts.validate()?;
    let (m, n) = (a.rows(), a.cols());
    let k = m.min(n);

    let (mut u, mut v, d) = if a.max_abs() == 0.0 {
        (
            ComplexMatrix::identity(m),
            ComplexMatrix::identity(n),
            vec![ZERO; k],
        )
    } else {
        // The decomposition is homogeneous in A; working on a power-of-two
        // rescaling keeps the Gram matrices clear of under- and overflow.
        let (scaled, back) = unit_scaled(a);
        let step1 = build_unitaries_step1(&scaled, opts.tol)?;
        let step2 = solve_diagonal_step2_with(&scaled, &step1.u0, &step1.v0, opts)?;
        let d = step2.d.0.into_iter().map(|z| scale_pow2(z, back)).collect();
        (step2.u0_adj, step1.v0, d)
    };
    let d = sort_by_modulus(d, &mut u, &mut v);

    let phases = factor_phases(&d, &convention)?;
    for j in 0..k {
        u.scale_column(j, phases.phase_u[j]);
        v.scale_column(j, phases.phase_v[j]);
    }

    let mut f = SvdFactorization {
        u,
        sigma: phases.sigma,
        v,
        d,
        phase_u: phases.phase_u,
        phase_v: phases.phase_v,
        convention,
        residual: 0.0,
    };
    f.residual = f.reconstruct().sub(a)?.frobenius_norm();
    Ok(f)
}

/// `a * 2^-e` with the largest entry modulus in `[1, 2)`, and `e`.
fn unit_scaled(a: &ComplexMatrix) -> (ComplexMatrix, i32) {
    let e = a.max_abs().log2().floor() as i32;
    if e == 0 {
        return (a.clone(), 0);
    }
    let data = a.as_slice().iter().map(|&z| scale_pow2(z, -e)).collect();
    (
        ComplexMatrix::new(a.rows(), a.cols(), data).expect("rescaling keeps entries finite"),
        e,
    )
}

/// `z * 2^e`, split in two steps so the factor itself never overflows.
fn scale_pow2(z: C64, e: i32) -> C64 {
    let half = e / 2;
    z * 2f64.powi(half) * 2f64.powi(e - half)
}

/// Stable reorder so `|d_j|` is nonincreasing, permuting the paired columns.
fn sort_by_modulus(d: Vec<C64>, u: &mut ComplexMatrix, v: &mut ComplexMatrix) -> ComplexDiagonal {
    let diag = ComplexDiagonal(d);
    if diag.is_nonincreasing() {
        return diag;
    }
    let mut order: Vec<usize> = (0..diag.len()).collect();
    order.sort_by(|&i, &j| diag.0[j].norm().total_cmp(&diag.0[i].norm()));
    let u_old = u.clone();
    let v_old = v.clone();
    for (new, &old) in order.iter().enumerate() {
        u.set_column(new, &u_old.column(old));
        v.set_column(new, &v_old.column(old));
    }
    ComplexDiagonal(order.iter().map(|&i| diag.0[i]).collect())
}

/// `U D V^dagger` with `D` the `m x n` diagonal of singular values.
pub fn reconstruct(f: &SvdFactorization) -> ComplexMatrix {
    let weights: Vec<C64> = f.sigma.iter().map(|&s| C64::new(s, 0.0)).collect();
    sum_of_terms(f.rows(), f.cols(), &weights, &f.u, &f.v)
}

/// The terms `T_j = d_j |u_j><v_j|` built from the phase-free columns
/// `u_j = U e_j / phase_u[j]`, `v_j = V e_j / phase_v[j]`. They sum to `A`
/// and, for distinct singular values, do not depend on eigenvector phases.
pub fn rank_one_terms(f: &SvdFactorization) -> Vec<ComplexMatrix> {
    let (m, n) = (f.rows(), f.cols());
    (0..f.d.len())
        .map(|j| {
            let u0: Vec<C64> = f.u.column(j).iter().map(|z| z / f.phase_u[j]).collect();
            let v0: Vec<C64> = f.v.column(j).iter().map(|z| z / f.phase_v[j]).collect();
            let mut t = ComplexMatrix::zeros(m, n);
            for r in 0..m {
                for c in 0..n {
                    t[(r, c)] = f.d.0[j] * u0[r] * v0[c].conj();
                }
            }
            t
        })
        .collect()
}

/// `<u|A|v>` for explicit vectors; handy when checking hand-derived `d_j`.
pub fn matrix_element(a: &ComplexMatrix, u: &[C64], v: &[C64]) -> Result<C64> {
    if u.len() != a.rows() || v.len() != a.cols() {
        return Err(Error::Dimension(format!(
            "<u|A|v> needs |u| = {} and |v| = {}, got {} and {}",
            a.rows(),
            a.cols(),
            u.len(),
            v.len()
        )));
    }
    let av: Vec<C64> = (0..a.rows())
        .map(|r| a.row(r).iter().zip(v).map(|(x, y)| x * y).sum())
        .collect();
    Ok(inner(u, &av))
}
