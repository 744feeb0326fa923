//! Reference implementations used only by the tests.
//!
//! The quadratic program oracle works on the unreduced problem over every
//! entry of the pattern (both triangles, no symmetry assumed):
//!
//! ```text
//! min 1/2 sum q_e (x_e - c_e)^2   s.t.  row sums = a,  column sums = b,  x >= 0
//! ```
//!
//! It maximizes the concave dual, whose maximizer gives `x = (c - E^T l / q)_+`,
//! by a regularized semismooth Newton method with a backtracking line search.

#![allow(dead_code)]

use dsproj_core::{ReducedProblem, SymmetricSparseMatrix, ValidationOptions};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

#[derive(Clone, Copy, Debug)]
pub struct OracleEntry {
    pub row: usize,
    pub col: usize,
    pub c: f64,
    /// Squared weight.
    pub q: f64,
}

#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub nrows: usize,
    pub ncols: usize,
    /// Row-major dense optimum.
    pub x: Vec<f64>,
    pub lambda_row: Vec<f64>,
    pub lambda_col: Vec<f64>,
    pub feasibility: f64,
}

fn primal(entries: &[OracleEntry], lr: &[f64], lc: &[f64]) -> Vec<f64> {
    entries
        .iter()
        .map(|e| (e.c - (lr[e.row] + lc[e.col]) / e.q).max(0.0))
        .collect()
}

/// Negated dual function and its gradient `b - E x`.
fn dual(entries: &[OracleEntry], lam: &[f64], nrows: usize, targets: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let (lr, lc) = lam.split_at(nrows);
    let x = primal(entries, lr, lc);
    let mut ex = vec![0.0; lam.len()];
    let mut value = 0.0;
    for (e, &xe) in entries.iter().zip(&x) {
        ex[e.row] += xe;
        ex[nrows + e.col] += xe;
        value += 0.5 * e.q * (xe - e.c).powi(2) + (lr[e.row] + lc[e.col]) * xe;
    }
    value -= lam.iter().zip(targets).map(|(l, t)| l * t).sum::<f64>();
    let grad = targets.iter().zip(&ex).map(|(t, s)| t - s).collect();
    (-value, grad, x)
}

pub fn qp_oracle(
    nrows: usize,
    ncols: usize,
    entries: &[OracleEntry],
    row_target: &[f64],
    col_target: &[f64],
) -> OracleSolution {
    let dim = nrows + ncols;
    let targets: Vec<f64> = row_target.iter().chain(col_target).copied().collect();
    let scale = targets.iter().fold(1.0f64, |a, t| a.max(t.abs()));
    let mut lam = vec![0.0; dim];
    let (mut theta, mut grad, mut x) = dual(entries, &lam, nrows, &targets);
    for _ in 0..500 {
        let gnorm = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if gnorm <= 1e-14 * scale {
            break;
        }
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for (e, &xe) in entries.iter().zip(&x) {
            if xe > 0.0 {
                let d = 1.0 / e.q;
                let (r, c) = (e.row, nrows + e.col);
                h[(r, r)] += d;
                h[(c, c)] += d;
                h[(r, c)] += d;
                h[(c, r)] += d;
            }
        }
        let mu = 1e-12 + 1e-2 * gnorm;
        for i in 0..dim {
            h[(i, i)] += mu;
        }
        // descent direction for the negated dual: H delta = -grad(theta) = E x - b
        let rhs = DVector::from_iterator(dim, grad.iter().map(|g| -g));
        let delta = match h.cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => rhs.clone(),
        };
        let slope: f64 = grad.iter().zip(delta.iter()).map(|(g, d)| g * d).sum();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = lam.iter().zip(delta.iter()).map(|(l, d)| l + t * d).collect();
            let (th, g, xt) = dual(entries, &trial, nrows, &targets);
            if th <= theta + 1e-4 * t * slope || (th - theta).abs() <= 1e-15 * theta.abs().max(1.0) {
                lam = trial;
                theta = th;
                grad = g;
                x = xt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let mut dense = vec![0.0; nrows * ncols];
    for (e, &xe) in entries.iter().zip(&x) {
        dense[e.row * ncols + e.col] = xe;
    }
    let feasibility = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    OracleSolution {
        nrows,
        ncols,
        x: dense,
        lambda_row: lam[..nrows].to_vec(),
        lambda_col: lam[nrows..].to_vec(),
        feasibility,
    }
}

/// Oracle for a symmetric input over its full pattern, without assuming a
/// symmetric solution.
pub fn symmetric_oracle(
    c: &SymmetricSparseMatrix,
    target: &[f64],
    weights: Option<&SymmetricSparseMatrix>,
) -> OracleSolution {
    let mut entries = Vec::new();
    for (i, j, v) in c.iter() {
        let q = weights.map_or(1.0, |w| w.get(i, j).powi(2));
        entries.push(OracleEntry { row: i, col: j, c: v, q });
        if i != j {
            entries.push(OracleEntry { row: j, col: i, c: v, q });
        }
    }
    let sol = qp_oracle(c.n(), c.n(), &entries, target, target);
    assert!(
        sol.feasibility <= 1e-11,
        "oracle did not converge: feasibility {:e}",
        sol.feasibility
    );
    sol
}

/// Reduced coordinates of a row-major dense symmetric matrix.
pub fn reduce_dense(rp: &ReducedProblem, x: &[f64]) -> Vec<f64> {
    let n = rp.n();
    rp.index_map()
        .map(|(i, j)| {
            let v = 0.5 * (x[i * n + j] + x[j * n + i]);
            if i == j {
                0.5 * v
            } else {
                v
            }
        })
        .collect()
}

/// Multipliers `(y, w)` of the reduced problem from the oracle's `(lambda, x)`.
pub fn reduced_multipliers(rp: &ReducedProblem, sol: &OracleSolution) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let x = reduce_dense(rp, &sol.x);
    let y: Vec<f64> = sol
        .lambda_row
        .iter()
        .zip(&sol.lambda_col)
        .map(|(a, b)| a + b)
        .collect();
    let aty = rp.apply_at(&y).unwrap();
    let w = (0..rp.m())
        .map(|k| -(rp.p()[k].powi(2) * (x[k] - rp.c()[k]) + aty[k]))
        .collect();
    (x, y, w)
}

/// Explicit `n x m` constraint matrix: column `k` holds the row sums of the
/// symmetric matrix whose only nonzeros come from variable `k`.
pub fn dense_a(rp: &ReducedProblem) -> DMatrix<f64> {
    let n = rp.n();
    let mut a = DMatrix::zeros(n, rp.m());
    for (k, (i, j)) in rp.index_map().enumerate() {
        let mut x = DMatrix::<f64>::zeros(n, n);
        if i == j {
            // x_k = X_ii / 2
            x[(i, i)] = 2.0;
        } else {
            x[(i, j)] = 1.0;
            x[(j, i)] = 1.0;
        }
        for r in 0..n {
            a[(r, k)] = x.row(r).sum();
        }
    }
    a
}

/// Kuhn's augmenting path matching on a dense boolean pattern.
pub fn has_perfect_matching(n: usize, adj: &[bool]) -> bool {
    fn augment(u: usize, n: usize, adj: &[bool], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for v in 0..n {
            if adj[u * n + v] && !seen[v] {
                seen[v] = true;
                if owner[v].map_or(true, |w| augment(w, n, adj, seen, owner)) {
                    owner[v] = Some(u);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; n];
    (0..n).all(|u| augment(u, n, adj, &mut vec![false; n], &mut owner))
}

/// Exhaustive search for a permutation supported on the pattern.
pub fn brute_force_feasible(n: usize, adj: &[bool]) -> bool {
    fn search(row: usize, n: usize, adj: &[bool], used: &mut [bool]) -> bool {
        if row == n {
            return true;
        }
        for col in 0..n {
            if adj[row * n + col] && !used[col] {
                used[col] = true;
                if search(row + 1, n, adj, used) {
                    return true;
                }
                used[col] = false;
            }
        }
        false
    }
    search(0, n, adj, &mut vec![false; n])
}

/// Symmetric boolean pattern with each upper-triangle position present with
/// probability `density`.
pub fn random_pattern<R: Rng>(rng: &mut R, n: usize, density: f64) -> Vec<bool> {
    let mut adj = vec![false; n * n];
    for j in 0..n {
        for i in 0..=j {
            if rng.gen_bool(density) {
                adj[i * n + j] = true;
                adj[j * n + i] = true;
            }
        }
    }
    adj
}

/// Uniform `(0, 1)` values on a pattern.
pub fn fill_pattern<R: Rng>(rng: &mut R, n: usize, adj: &[bool]) -> SymmetricSparseMatrix {
    let mut triplets = Vec::new();
    for j in 0..n {
        for i in 0..=j {
            if adj[i * n + j] {
                triplets.push((i, j, rng.gen_range(f64::EPSILON..1.0)));
            }
        }
    }
    SymmetricSparseMatrix::from_triplets(n, triplets, &ValidationOptions::default()).unwrap()
}

/// Random instance whose pattern admits a doubly stochastic matrix.
pub fn random_feasible<R: Rng>(rng: &mut R, n: usize, density: f64) -> SymmetricSparseMatrix {
    loop {
        let adj = random_pattern(rng, n, density);
        if has_perfect_matching(n, &adj) {
            return fill_pattern(rng, n, &adj);
        }
    }
}

/// Random positive weights on the pattern of `c`.
pub fn random_weights<R: Rng>(rng: &mut R, c: &SymmetricSparseMatrix) -> SymmetricSparseMatrix {
    let triplets: Vec<_> = c.iter().map(|(i, j, _)| (i, j, rng.gen_range(0.5..2.0))).collect();
    SymmetricSparseMatrix::from_triplets(c.n(), triplets, &ValidationOptions::default()).unwrap()
}

/// Maximum absolute row sum of `a - b`, both row-major `n x n`.
pub fn induced_inf_norm(a: &[f64], b: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|i| (0..n).map(|j| (a[i * n + j] - b[i * n + j]).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}
