//! Linear algebra for the KKT step of the ADMM iteration.
//!
//! The `(m + n) x (m + n)` system
//!
//! ```text
//! [ P + sigma I   rho A^T ] [x]   [r]
//! [ rho A        -rho I   ] [z] = [0]
//! ```
//!
//! is solved through its `n x n` Schur complement
//! `M = rho A (P + sigma I)^{-1} A^T + I`. Because `P + sigma I` is diagonal,
//! `M` has exactly the pattern of `S + I` and is assembled entry by entry from
//! the index map: with `d` the diagonal of `(P + sigma I)^{-1}`,
//!
//! ```text
//! A diag(d) A^T = S .* (D + D^T) + diag((S .* (D + D^T)) 1)
//! ```
//!
//! where `D` is the upper-triangular matrix holding `d`.

pub mod cg;
pub mod cholesky;
pub mod dense;

use crate::error::{Error, Result};
use crate::reformulation::ReducedProblem;

pub use cg::{cg_solve, CgInfo};
pub use cholesky::{CholeskyFactor, Ordering};
pub use dense::{dense_inverse_apply, DenseReducedInverse};

/// Upper triangle (diagonal included) of a symmetric matrix, compressed by column.
#[derive(Clone, Debug, PartialEq)]
pub struct UpperCsc {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl UpperCsc {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (row, col) = (i.min(j), i.max(j));
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        match self.row_idx[range.clone()].binary_search(&row) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Row-major dense copy of the full symmetric matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[k];
                out[i * n + j] = self.values[k];
                out[j * n + i] = self.values[k];
            }
        }
        out
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `out = M v` for the full symmetric matrix.
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for j in 0..self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[k];
                let a = self.values[k];
                out[i] += a * v[j];
                if i != j {
                    out[j] += a * v[i];
                }
            }
        }
    }
}

/// `S .* (D + D^T) + diag((S .* (D + D^T)) 1)` where `D` holds `d[k]` at the
/// upper-triangle position `(rows[k], cols[k])`. Positions must be sorted
/// column-major. The result has the pattern of `S + I`.
pub fn structural_product(n: usize, rows: &[usize], cols: &[usize], d: &[f64]) -> UpperCsc {
    let m = rows.len();
    let mut col_ptr = Vec::with_capacity(n + 1);
    let mut row_idx = Vec::with_capacity(m + n);
    let mut values = Vec::with_capacity(m + n);
    let mut diag = vec![0.0; n];
    let mut diag_slot = vec![0usize; n];
    col_ptr.push(0);
    let mut k = 0;
    for j in 0..n {
        while k < m && cols[k] == j {
            let i = rows[k];
            if i == j {
                diag[j] += 4.0 * d[k];
            } else {
                row_idx.push(i);
                values.push(d[k]);
                diag[i] += d[k];
                diag[j] += d[k];
            }
            k += 1;
        }
        diag_slot[j] = values.len();
        row_idx.push(j);
        values.push(0.0);
        col_ptr.push(row_idx.len());
    }
    for j in 0..n {
        values[diag_slot[j]] = diag[j];
    }
    UpperCsc {
        n,
        col_ptr,
        row_idx,
        values,
    }
}

/// `(p_k^2 + sigma)^{-1}` for every reduced variable.
pub fn inverse_diagonal(rp: &ReducedProblem, sigma: f64) -> Vec<f64> {
    rp.p().iter().map(|p| 1.0 / (p * p + sigma)).collect()
}

/// The reduced KKT matrix `rho A (P + sigma I)^{-1} A^T + I`.
#[derive(Clone, Debug)]
pub struct ReducedSystemMatrix {
    pub matrix: UpperCsc,
    pub rho: f64,
    pub sigma: f64,
    pub diag_inv: Vec<f64>,
}

impl ReducedSystemMatrix {
    pub fn n(&self) -> usize {
        self.matrix.n
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.matrix.mul_vec_into(v, &mut out);
        out
    }
}

/// Assembles the reduced matrix in `O(m)`.
pub fn assemble_reduced_matrix(rp: &ReducedProblem, rho: f64, sigma: f64) -> ReducedSystemMatrix {
    let diag_inv = inverse_diagonal(rp, sigma);
    let mut matrix = structural_product(rp.n(), rp.rows(), rp.cols(), &diag_inv);
    for j in 0..matrix.n {
        for k in matrix.col_ptr[j]..matrix.col_ptr[j + 1] {
            matrix.values[k] *= rho;
            if matrix.row_idx[k] == j {
                matrix.values[k] += 1.0;
            }
        }
    }
    ReducedSystemMatrix {
        matrix,
        rho,
        sigma,
        diag_inv,
    }
}

/// Diagonal of the reduced matrix without assembling the rest of it.
pub fn reduced_diagonal(rp: &ReducedProblem, rho: f64, diag_inv: &[f64]) -> Vec<f64> {
    let mut diag = vec![0.0; rp.n()];
    for (k, (i, j)) in rp.index_map().enumerate() {
        if i == j {
            diag[i] += 4.0 * diag_inv[k];
        } else {
            diag[i] += diag_inv[k];
            diag[j] += diag_inv[k];
        }
    }
    diag.iter_mut().for_each(|d| *d = 1.0 + rho * *d);
    diag
}

/// How the reduced system is solved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BackendKind {
    /// Sherman-Morrison on dense unweighted patterns, otherwise Cholesky up to
    /// the size limit and conjugate gradients beyond it.
    #[default]
    Auto,
    Cholesky,
    ConjugateGradient,
    ShermanMorrison,
}

impl BackendKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BackendKind::Auto => "auto",
            BackendKind::Cholesky => "cholesky",
            BackendKind::ConjugateGradient => "cg",
            BackendKind::ShermanMorrison => "dense",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearBackend {
    pub kind: BackendKind,
    pub ordering: Ordering,
    /// Relative residual target of each inner CG solve.
    pub cg_tolerance: f64,
    /// Defaults to `10 n` when unset.
    pub cg_max_iters: Option<usize>,
    pub cg_jacobi: bool,
    /// `Auto` switches from Cholesky to CG above this many nonzeros of `S + I`.
    pub cholesky_nnz_limit: usize,
}

impl Default for LinearBackend {
    fn default() -> Self {
        Self {
            kind: BackendKind::Auto,
            ordering: Ordering::Amd,
            cg_tolerance: 1e-10,
            cg_max_iters: None,
            cg_jacobi: true,
            cholesky_nnz_limit: 20_000_000,
        }
    }
}

impl LinearBackend {
    pub fn with_kind(kind: BackendKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    /// The concrete backend used for `rp`.
    pub fn resolve(&self, rp: &ReducedProblem) -> Result<BackendKind> {
        let dense_ok = rp.is_dense() && !rp.is_weighted();
        match self.kind {
            BackendKind::Auto => Ok(if dense_ok {
                BackendKind::ShermanMorrison
            } else if rp.reduced_system_nnz() <= self.cholesky_nnz_limit {
                BackendKind::Cholesky
            } else {
                BackendKind::ConjugateGradient
            }),
            BackendKind::ShermanMorrison if !dense_ok => Err(Error::Config(
                "the closed-form backend needs a fully dense, unweighted pattern".into(),
            )),
            kind => Ok(kind),
        }
    }
}

enum ReducedSolver {
    Cholesky(CholeskyFactor),
    ConjugateGradient {
        inv_diag: Option<Vec<f64>>,
        tol: f64,
        max_iters: usize,
    },
    Dense(DenseReducedInverse),
}

/// Solver for the KKT system of one ADMM run. Any factorization happens once,
/// in [`KktSystem::new`].
pub struct KktSystem {
    rho: f64,
    sigma: f64,
    kind: BackendKind,
    diag_inv: Vec<f64>,
    solver: ReducedSolver,
    scratch_m: Vec<f64>,
    scratch_n: Vec<f64>,
    work_n: Vec<f64>,
    zeta: Vec<f64>,
    factorizations: usize,
    cg_iterations: usize,
    solves: usize,
}

impl KktSystem {
    pub fn new(rp: &ReducedProblem, rho: f64, sigma: f64, backend: &LinearBackend) -> Result<Self> {
        let kind = backend.resolve(rp)?;
        let n = rp.n();
        let mut factorizations = 0;
        let (diag_inv, solver) = match kind {
            BackendKind::Cholesky => {
                let m = assemble_reduced_matrix(rp, rho, sigma);
                let factor = CholeskyFactor::new(&m.matrix, backend.ordering)?;
                factorizations += 1;
                (m.diag_inv, ReducedSolver::Cholesky(factor))
            }
            BackendKind::ConjugateGradient => {
                let diag_inv = inverse_diagonal(rp, sigma);
                let inv_diag = backend.cg_jacobi.then(|| {
                    reduced_diagonal(rp, rho, &diag_inv)
                        .into_iter()
                        .map(|d| 1.0 / d)
                        .collect()
                });
                let solver = ReducedSolver::ConjugateGradient {
                    inv_diag,
                    tol: backend.cg_tolerance,
                    max_iters: backend.cg_max_iters.unwrap_or(10 * n.max(1)),
                };
                (diag_inv, solver)
            }
            BackendKind::ShermanMorrison => (
                inverse_diagonal(rp, sigma),
                ReducedSolver::Dense(DenseReducedInverse::new(n, rho, sigma)),
            ),
            BackendKind::Auto => unreachable!("resolve never returns Auto"),
        };
        Ok(Self {
            rho,
            sigma,
            kind,
            diag_inv,
            solver,
            scratch_m: vec![0.0; rp.m()],
            scratch_n: vec![0.0; n],
            work_n: vec![0.0; n],
            zeta: vec![0.0; n],
            factorizations,
            cg_iterations: 0,
            solves: 0,
        })
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Number of Cholesky factorizations performed (0 or 1).
    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    /// Total inner CG iterations across all solves.
    pub fn cg_iterations(&self) -> usize {
        self.cg_iterations
    }

    pub fn solves(&self) -> usize {
        self.solves
    }

    /// Solves the KKT system with right-hand side `(rhs, 0)`.
    ///
    /// The reduced system `M z = A (P + sigma I)^{-1} rhs` is solved first, then
    /// `x_tilde = (P + sigma I)^{-1} (rhs - rho A^T z)` and `z_tilde = A x_tilde`.
    pub fn solve_into(
        &mut self,
        rp: &ReducedProblem,
        rhs: &[f64],
        x_tilde: &mut [f64],
        z_tilde: &mut [f64],
    ) -> Result<()> {
        let Self {
            rho,
            diag_inv,
            solver,
            scratch_m,
            scratch_n,
            work_n,
            zeta,
            cg_iterations,
            solves,
            ..
        } = self;
        let rho = *rho;

        for ((t, r), d) in scratch_m.iter_mut().zip(rhs).zip(diag_inv.iter()) {
            *t = r * d;
        }
        rp.apply_a_into(scratch_m, scratch_n);

        match solver {
            ReducedSolver::Cholesky(factor) => {
                zeta.copy_from_slice(scratch_n);
                factor.solve_in_place(zeta, work_n);
            }
            ReducedSolver::Dense(inv) => inv.apply_into(scratch_n, zeta),
            ReducedSolver::ConjugateGradient {
                inv_diag,
                tol,
                max_iters,
            } => {
                let tmp = &mut *scratch_m;
                let d = &*diag_inv;
                let apply = |v: &[f64], out: &mut [f64]| {
                    rp.apply_at_into(v, tmp);
                    tmp.iter_mut().zip(d).for_each(|(t, d)| *t *= d);
                    rp.apply_a_into(tmp, out);
                    out.iter_mut().zip(v).for_each(|(o, v)| *o = rho * *o + v);
                };
                let info = cg_solve(apply, inv_diag.as_deref(), scratch_n, zeta, *tol, *max_iters)?;
                *cg_iterations += info.iterations;
            }
        }

        rp.apply_at_into(zeta, x_tilde);
        for ((x, r), d) in x_tilde.iter_mut().zip(rhs).zip(diag_inv.iter()) {
            *x = d * (r - rho * *x);
        }
        rp.apply_a_into(x_tilde, z_tilde);
        *solves += 1;
        Ok(())
    }

    pub fn solve(&mut self, rp: &ReducedProblem, rhs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if rhs.len() != rp.m() {
            return Err(Error::DimensionMismatch {
                expected: rp.m(),
                actual: rhs.len(),
            });
        }
        let mut x = vec![0.0; rp.m()];
        let mut z = vec![0.0; rp.n()];
        self.solve_into(rp, rhs, &mut x, &mut z)?;
        Ok((x, z))
    }
}
