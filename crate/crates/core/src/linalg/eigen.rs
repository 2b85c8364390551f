//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation is a 2x2 unitary `G = diag(1, e^{-i phi}) * R(theta)` acting on
//! rows and columns `p, q`: the diagonal phase makes `h_pq` real, then the
//! classic real Jacobi rotation annihilates it.

use std::cmp::Ordering;

use super::matrix::{inner, vector_norm, ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Relative tolerance used when callers do not supply one.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Hard cap on Jacobi sweeps before reporting [`Error::Convergence`].
pub const MAX_SWEEPS: usize = 60;

/// Components within this distance of the largest modulus compete for the
/// phase anchor; the lowest index wins.
const ANCHOR_TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Nonincreasing.
    pub eigenvalues: Vec<f64>,
    /// Column `j` is the unit eigenvector for `eigenvalues[j]`.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, j: usize) -> Vec<C64> {
        self.eigenvectors.column(j)
    }
}

/// Eigen-decomposes a Hermitian matrix.
///
/// Eigenvalues come back nonincreasing (stable with respect to solver emission
/// order on ties). Every eigenvector is scaled so that its largest-modulus
/// component is real and positive, which makes the output reproducible
/// bit-for-bit. Vectors inside a degenerate cluster (gap below
/// `tol * max(1, ||H||_F)`) are re-orthonormalized in index order.
pub fn hermitian_eigendecompose(h: &ComplexMatrix, tol: f64) -> Result<EigenDecomposition> {
    if !h.is_square() {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Dimension(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n = h.rows();
    let norm = h.frobenius_norm();
    let scale = norm.max(1.0);
    let defect = h.hermitian_defect();
    if defect > tol * scale {
        return Err(Error::NotHermitian {
            defect,
            bound: tol * scale,
        });
    }

    let mut a = symmetrized(h);
    let mut q = ComplexMatrix::identity(n);
    jacobi_sweeps(&mut a, &mut q, tol * norm)?;

    let raw: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // sort_by is stable: equal eigenvalues keep emission order.
    order.sort_by(|&i, &j| raw[j].partial_cmp(&raw[i]).unwrap_or(Ordering::Equal));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| raw[i]).collect();
    let mut columns: Vec<Vec<C64>> = order.iter().map(|&i| q.column(i)).collect();

    let gap = tol * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eigenvalues[end - 1] - eigenvalues[end] < gap {
            end += 1;
        }
        if end - start > 1 {
            gram_schmidt(&mut columns[start..end]);
        }
        start = end;
    }
    for col in &mut columns {
        canonicalize_phase(col);
    }

    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors: ComplexMatrix::from_columns(&columns)?,
    })
}

/// `(H + H^dagger) / 2` with an exactly real diagonal.
fn symmetrized(h: &ComplexMatrix) -> ComplexMatrix {
    let n = h.rows();
    let mut a = h.clone();
    for i in 0..n {
        a[(i, i)] = C64::new(h[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let z = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            a[(i, j)] = z;
            a[(j, i)] = z.conj();
        }
    }
    a
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

fn jacobi_sweeps(a: &mut ComplexMatrix, q: &mut ComplexMatrix, threshold: f64) -> Result<()> {
    let n = a.rows();
    let mut off = off_diagonal_norm(a);
    for _ in 0..MAX_SWEEPS {
        if off <= threshold {
            return Ok(());
        }
        for p in 0..n {
            for r in (p + 1)..n {
                rotate(a, q, p, r);
            }
        }
        off = off_diagonal_norm(a);
    }
    if off <= threshold {
        return Ok(());
    }
    Err(Error::Convergence {
        sweeps: MAX_SWEEPS,
        off_diagonal: off,
    })
}

/// Annihilates `a[p][q]` with a unitary similarity and accumulates it into `vecs`.
fn rotate(a: &mut ComplexMatrix, vecs: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 || !r.is_normal() {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let phase = apq / r;

    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // G = [[g_pp, g_pq], [g_qp, g_qq]]
    let g_pp = C64::new(c, 0.0);
    let g_pq = C64::new(s, 0.0);
    let g_qp = -phase.conj() * s;
    let g_qq = phase.conj() * c;

    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(app - t * r, 0.0);
    a[(q, q)] = C64::new(aqq + t * r, 0.0);

    for k in 0..vecs.rows() {
        let vkp = vecs[(k, p)];
        let vkq = vecs[(k, q)];
        vecs[(k, p)] = vkp * g_pp + vkq * g_qp;
        vecs[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
}

/// Modified Gram-Schmidt in index order.
pub(crate) fn gram_schmidt(vectors: &mut [Vec<C64>]) {
    for j in 0..vectors.len() {
        let (done, rest) = vectors.split_at_mut(j);
        let v = &mut rest[0];
        for u in done.iter() {
            let proj = inner(u, v);
            for (x, &y) in v.iter_mut().zip(u) {
                *x -= proj * y;
            }
        }
        let norm = vector_norm(v);
        if norm > 0.0 {
            for x in v.iter_mut() {
                *x /= norm;
            }
        }
    }
}

/// Rotates `v` so its anchor component (largest modulus, lowest index on
/// ties) is real and strictly positive. The zero vector is left alone.
pub fn canonicalize_phase(v: &mut [C64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let anchor = v
        .iter()
        .position(|z| z.norm() >= max - ANCHOR_TIE)
        .expect("some component attains the maximum");
    let modulus = v[anchor].norm();
    let rotation = v[anchor].conj() / modulus;
    for z in v.iter_mut() {
        *z *= rotation;
    }
    v[anchor] = C64::new(modulus, 0.0);
}
