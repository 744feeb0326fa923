//! Shared inputs for the benchmarks under `benches/`.

use dsproj_core::synthetic::banded;
use dsproj_core::{build_reduced_problem, ProblemSpec, ReducedProblem};

/// Reduced problem of a seeded banded matrix with unit targets.
pub fn banded_problem(n: usize, bandwidth: usize) -> ReducedProblem {
    build_reduced_problem(&ProblemSpec::new(banded(n, bandwidth, 1))).expect("banded input is valid")
}

/// Deterministic points in `dim` dimensions, grouped around `clusters` centers.
pub fn clustered_points(n: usize, dim: usize, clusters: usize) -> Vec<Vec<f64>> {
    // a small LCG keeps this crate free of an RNG dependency
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let centers: Vec<Vec<f64>> = (0..clusters).map(|_| (0..dim).map(|_| 4.0 * next()).collect()).collect();
    (0..n)
        .map(|i| centers[i % clusters].iter().map(|c| c + next() - 0.5).collect())
        .collect()
}
