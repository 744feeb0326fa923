//! Comparison methods: the dense alternating scheme of Zass and Shashua,
//! symmetric Sinkhorn balancing, and the RBF affinity used to build test inputs.

use crate::error::{Error, Result};
use crate::matrix::{SymmetricSparseMatrix, ValidationOptions};

/// Square matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: data.len(),
            });
        }
        Ok(Self { n, data })
    }

    pub fn from_sparse(m: &SymmetricSparseMatrix) -> Self {
        Self {
            n: m.n(),
            data: m.to_dense(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.data.chunks(self.n.max(1)).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for row in self.data.chunks(self.n.max(1)) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Sparse copy; exact zeros are dropped.
    pub fn to_sparse(&self) -> Result<SymmetricSparseMatrix> {
        SymmetricSparseMatrix::from_dense(self.n, &self.data)
    }

    /// `1/2 ||self - other||_F^2`.
    pub fn half_sq_distance(&self, other: &DenseMatrix) -> f64 {
        0.5 * self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }

    /// `max_i |row_sum_i - target|`.
    pub fn row_sum_violation(&self, target: f64) -> f64 {
        self.row_sums().iter().fold(0.0, |acc, s| acc.max((s - target).abs()))
    }
}

/// `||A - B||_inf` in the induced (maximum absolute row sum) norm.
pub fn induced_inf_norm_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.n, b.n);
    let n = a.n.max(1);
    a.data
        .chunks(n)
        .zip(b.data.chunks(n))
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest entrywise difference.
pub fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.data.iter().zip(&b.data).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaselineTraceRow {
    pub iter: usize,
    pub r_prim: f64,
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct BaselineResult {
    pub x: DenseMatrix,
    pub iterations: usize,
    pub final_primal_residual: f64,
    pub converged: bool,
    pub trace: Vec<BaselineTraceRow>,
}

/// `X + n^-2 (1^T X 1 + n) 1 1^T - n^-1 (X 1 1^T + 1 1^T X)`: the projection
/// onto matrices whose rows and columns sum to one.
pub fn zass_affine_step(x: &DenseMatrix) -> DenseMatrix {
    let n = x.n;
    let nf = n as f64;
    let rows = x.row_sums();
    let cols = x.col_sums();
    let total: f64 = rows.iter().sum();
    let shift = (total + nf) / (nf * nf);
    let mut data = x.data.clone();
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] += shift - (rows[i] + cols[j]) / nf;
        }
    }
    DenseMatrix { n, data }
}

/// Alternates the affine projection with clipping at zero, starting from `C`,
/// until the row sums are within `tol` of one.
pub fn zass_normalize(c: &DenseMatrix, tol: f64, max_iters: usize) -> BaselineResult {
    let mut x = c.clone();
    let mut r_prim = x.row_sum_violation(1.0);
    let mut trace = vec![BaselineTraceRow {
        iter: 0,
        r_prim,
        objective: 0.0,
    }];
    let mut iterations = 0;
    while r_prim > tol && iterations < max_iters {
        x = zass_affine_step(&x);
        x.data.iter_mut().for_each(|v| *v = v.max(0.0));
        iterations += 1;
        r_prim = x.row_sum_violation(1.0);
        trace.push(BaselineTraceRow {
            iter: iterations,
            r_prim,
            objective: x.half_sq_distance(c),
        });
    }
    BaselineResult {
        x,
        iterations,
        final_primal_residual: r_prim,
        converged: r_prim <= tol,
        trace,
    }
}

#[derive(Clone, Debug)]
pub struct BalanceResult {
    /// Positive scaling with `X = diag(d) C diag(d)`.
    pub d: Vec<f64>,
    pub x: SymmetricSparseMatrix,
    pub iterations: usize,
    pub final_primal_residual: f64,
    pub converged: bool,
    pub trace: Vec<BaselineTraceRow>,
}

fn balance_residual(d: &[f64], cd: &[f64], target: &[f64]) -> f64 {
    d.iter()
        .zip(cd)
        .zip(target)
        .fold(0.0, |acc, ((d, c), t)| acc.max((d * c - t).abs()))
}

/// Symmetric Sinkhorn-Knopp: `d <- sqrt(d .* t ./ (C d))` until the row sums
/// of `diag(d) C diag(d)` are within `tol` of `target`.
pub fn sinkhorn_balance(
    c: &SymmetricSparseMatrix,
    target: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<BalanceResult> {
    let n = c.n();
    if target.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: target.len(),
        });
    }
    if let Some(i) = c.row_sums().iter().position(|&s| s <= 0.0) {
        return Err(Error::Domain(format!("balancing is undefined: row {} is zero", i + 1)));
    }
    let mut d = vec![1.0; n];
    let mut cd = c.mul_vec(&d);
    let mut r_prim = balance_residual(&d, &cd, target);
    let mut trace = vec![BaselineTraceRow {
        iter: 0,
        r_prim,
        objective: 0.0,
    }];
    let mut iterations = 0;
    while r_prim > tol && iterations < max_iters {
        for i in 0..n {
            d[i] = (d[i] * target[i] / cd[i]).sqrt();
        }
        cd = c.mul_vec(&d);
        iterations += 1;
        r_prim = balance_residual(&d, &cd, target);
        let objective = 0.5
            * c.iter()
                .map(|(i, j, v)| {
                    let diff = (d[i] * d[j] - 1.0) * v;
                    if i == j {
                        diff * diff
                    } else {
                        2.0 * diff * diff
                    }
                })
                .sum::<f64>();
        trace.push(BaselineTraceRow {
            iter: iterations,
            r_prim,
            objective,
        });
        if !r_prim.is_finite() {
            break;
        }
    }
    let x = c.symmetric_scaled(&d);
    Ok(BalanceResult {
        d,
        x,
        iterations,
        final_primal_residual: r_prim,
        converged: r_prim <= tol,
        trace,
    })
}

/// `C_ij = exp(-||x_i - x_j||^2 / sigma^2)`, dropping off-diagonal entries
/// below `truncation`.
pub fn rbf_affinity(points: &[Vec<f64>], sigma: f64, truncation: f64) -> Result<SymmetricSparseMatrix> {
    if !(sigma > 0.0) {
        return Err(Error::Domain("sigma must be positive".into()));
    }
    if !(truncation >= 0.0) {
        return Err(Error::Domain("truncation must be nonnegative".into()));
    }
    let n = points.len();
    let s2 = sigma * sigma;
    let mut triplets = Vec::new();
    for j in 0..n {
        for i in 0..j {
            let d2: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            let v = (-d2 / s2).exp();
            if v >= truncation && v > 0.0 {
                triplets.push((i, j, v));
            }
        }
        triplets.push((j, j, 1.0));
    }
    SymmetricSparseMatrix::from_triplets(n, triplets, &ValidationOptions::default())
}
