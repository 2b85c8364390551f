#![allow(dead_code)]

use phasesvd::{ComplexMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; the exact distribution hardly matters here.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(gaussian(rng), gaussian(rng))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let data = (0..rows * cols).map(|_| complex_gaussian(rng)).collect();
    ComplexMatrix::new(rows, cols, data).unwrap()
}

pub fn random_rank_deficient(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    rank: usize,
) -> ComplexMatrix {
    let left = random_matrix(rng, rows, rank);
    let right = random_matrix(rng, rank, cols);
    left.mat_mul(&right).unwrap()
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let m = random_matrix(rng, n, n);
    m.add(&m.adjoint()).unwrap().scale(C64::new(0.5, 0.0))
}

/// Haar-ish unitary from Gram-Schmidt on a Gaussian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let m = random_matrix(rng, n, n);
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| m.column(j)).collect();
    for j in 0..n {
        for k in 0..j {
            let proj: C64 = cols[k]
                .iter()
                .zip(&cols[j])
                .map(|(a, b)| a.conj() * b)
                .sum();
            let prev = cols[k].clone();
            for (x, y) in cols[j].iter_mut().zip(&prev) {
                *x -= proj * y;
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    ComplexMatrix::from_columns(&cols).unwrap()
}

pub fn random_phase(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
}

pub fn max_entry_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.sub(b).unwrap().max_abs()
}
