//! Seeded inputs for the benchmarks.

use phasesvd::{BipartiteState, ComplexMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries with real and imaginary parts uniform in `[-1, 1)`.
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let data = (0..rows * cols)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    ComplexMatrix::new(rows, cols, data).expect("finite entries")
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let m = random_matrix(rng, n, n);
    m.add(&m.adjoint())
        .expect("square")
        .scale(C64::new(0.5, 0.0))
}

pub fn random_state(rng: &mut ChaCha8Rng, dim_a: usize, dim_b: usize) -> BipartiteState {
    let m = random_matrix(rng, dim_a, dim_b);
    let norm = m.frobenius_norm();
    let amps = m.into_vec().into_iter().map(|z| z / norm).collect();
    BipartiteState::new(dim_a, dim_b, amps).expect("matching length")
}
