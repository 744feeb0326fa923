//! Synthetic inputs for benchmarks and scaling checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::{SymmetricSparseMatrix, ValidationOptions};

/// Symmetric banded matrix with entries uniform in `[0.1, 1)` on `|i - j| <= bandwidth`.
/// Its full pattern has `n (2b + 1) - b (b + 1)` nonzeros for `b < n`.
pub fn banded(n: usize, bandwidth: usize, seed: u64) -> SymmetricSparseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::with_capacity(n * (bandwidth + 1));
    for j in 0..n {
        for i in j.saturating_sub(bandwidth)..=j {
            triplets.push((i, j, rng.gen_range(0.1..1.0)));
        }
    }
    SymmetricSparseMatrix::from_triplets(n, triplets, &ValidationOptions::default())
        .expect("banded entries are valid by construction")
}

/// Size of the banded pattern for `n` and `bandwidth`.
pub fn banded_nnz(n: usize, bandwidth: usize) -> usize {
    let b = bandwidth.min(n.saturating_sub(1));
    n * (2 * b + 1) - b * (b + 1)
}
