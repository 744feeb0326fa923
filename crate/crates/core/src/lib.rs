//! Nearest doubly stochastic matrix with a prescribed sparsity pattern.
//!
//! Given a symmetric nonnegative `C` with pattern `S`, [`solve`] finds
//!
//! ```text
//! argmin 1/2 ||W .* (X - C)||_F^2   s.t.  X 1 = r,  X >= 0,  X_ij = 0 off S
//! ```
//!
//! The optimum is symmetric, so only the upper triangle is optimized. ADMM is
//! applied to that reduced problem and every KKT system is reduced to an
//! `n x n` positive definite system with the pattern of `S + I`, which is
//! factorized once (or solved by conjugate gradients).

pub mod admm;
pub mod baselines;
pub mod error;
pub mod feasibility;
pub mod linear;
pub mod matrix;
pub mod reformulation;
pub mod synthetic;

pub use admm::{
    admm_step, compute_residuals, solve, AdmmSolver, Formulation, Residuals, RunOutcome, Solution, SolveStats,
    SolverConfig, SolverState, Status, TraceRow,
};
pub use baselines::{
    induced_inf_norm_diff, max_abs_diff, rbf_affinity, sinkhorn_balance, zass_affine_step, zass_normalize,
    BalanceResult, BaselineResult, BaselineTraceRow, DenseMatrix,
};
pub use error::{Error, Result};
pub use feasibility::{feasibility_check, FeasibilityCertificate};
pub use linear::{
    assemble_reduced_matrix, cg_solve, dense_inverse_apply, BackendKind, CholeskyFactor, KktSystem, LinearBackend,
    Ordering, ReducedSystemMatrix, UpperCsc,
};
pub use matrix::{
    parse_matrix_market, pattern_of, read_coordinate, read_matrix_market, write_coo, write_matrix_market, CooMatrix,
    CoordinateFile, DuplicatePolicy, MatrixSymmetry, NegativePolicy, Pattern, SymmetricSparseMatrix,
    ValidationOptions,
};
pub use reformulation::{
    build_full_reduced_problem, build_reduced_problem, embed_nonsymmetric, extract_embedded_block, ProblemSpec,
    ReducedProblem,
};
