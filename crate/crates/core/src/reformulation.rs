//! The reduced problem over the scaled upper triangle of `X`.
//!
//! A symmetric `X` supported on the pattern `S` is represented by the vector
//! `x_u` with one component per stored upper-triangle position: off-diagonal
//! components hold `X_ij`, diagonal components hold `X_ii / 2`, so that
//! `X = X_u + X_u^T`. In these coordinates the row-sum constraint is `A x_u = r`
//! and the Frobenius objective becomes `||p .* (x_u - c_u)||`. `A` is never
//! stored; [`ReducedProblem::apply_a`] and [`ReducedProblem::apply_at`] walk the
//! index map once.

use crate::error::{Error, Result};
use crate::matrix::{CooMatrix, DuplicatePolicy, Pattern, SymmetricSparseMatrix, ValidationOptions};

/// Matrix to approximate, row-sum targets and optional objective weights.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    matrix: SymmetricSparseMatrix,
    target: Vec<f64>,
    weights: Option<SymmetricSparseMatrix>,
}

impl ProblemSpec {
    /// Unweighted problem with every row summing to one.
    pub fn new(matrix: SymmetricSparseMatrix) -> Self {
        let n = matrix.n();
        Self {
            matrix,
            target: vec![1.0; n],
            weights: None,
        }
    }

    pub fn with_target(mut self, target: Vec<f64>) -> Result<Self> {
        if target.len() != self.matrix.n() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.n(),
                actual: target.len(),
            });
        }
        if let Some((i, t)) = target
            .iter()
            .enumerate()
            .find(|(_, t)| !(t.is_finite() && **t > 0.0))
        {
            return Err(Error::Specification(format!(
                "target entry {} must be positive and finite, got {t}",
                i + 1
            )));
        }
        self.target = target;
        Ok(self)
    }

    /// Every row and column sums to `tau`.
    pub fn with_uniform_target(self, tau: f64) -> Result<Self> {
        let n = self.matrix.n();
        self.with_target(vec![tau; n])
    }

    /// Minimizes `||W .* (X - C)||_F` instead of the plain Frobenius norm.
    pub fn with_weights(mut self, weights: SymmetricSparseMatrix) -> Result<Self> {
        if weights.n() != self.matrix.n() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.n(),
                actual: weights.n(),
            });
        }
        if let Some((i, j, _)) = self
            .matrix
            .iter()
            .find(|&(i, j, _)| !(weights.get(i, j) > 0.0))
        {
            return Err(Error::Specification(format!(
                "weight at ({}, {}) must be positive where the matrix is nonzero",
                i + 1,
                j + 1
            )));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn matrix(&self) -> &SymmetricSparseMatrix {
        &self.matrix
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn weights(&self) -> Option<&SymmetricSparseMatrix> {
        self.weights.as_ref()
    }

    /// True when all targets are equal.
    pub fn uniform_target(&self) -> Option<f64> {
        let first = *self.target.first()?;
        self.target.iter().all(|&t| t == first).then_some(first)
    }
}

/// Data of the reduced quadratic program
/// `min 1/2 ||p .* (x - c)||^2  s.t.  x >= 0,  A x = r`.
#[derive(Clone, Debug)]
pub struct ReducedProblem {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    c: Vec<f64>,
    p: Vec<f64>,
    target: Vec<f64>,
    weighted: bool,
    /// Components pinned to zero (only for the full upper-triangle variant).
    fixed_zero: Option<Vec<bool>>,
}

fn scale_factor(i: usize, j: usize) -> f64 {
    if i == j {
        2.0
    } else {
        std::f64::consts::SQRT_2
    }
}

/// Builds the reduced problem over the upper triangle of the pattern of `C`.
pub fn build_reduced_problem(spec: &ProblemSpec) -> Result<ReducedProblem> {
    let m = spec.matrix.nnz_upper();
    let mut rows = Vec::with_capacity(m);
    let mut cols = Vec::with_capacity(m);
    let mut c = Vec::with_capacity(m);
    let mut p = Vec::with_capacity(m);
    for (i, j, v) in spec.matrix.iter() {
        rows.push(i);
        cols.push(j);
        c.push(if i == j { 0.5 * v } else { v });
        let w = spec.weights.as_ref().map_or(1.0, |w| w.get(i, j));
        p.push(scale_factor(i, j) * w);
    }
    Ok(ReducedProblem {
        n: spec.matrix.n(),
        rows,
        cols,
        c,
        p,
        target: spec.target.clone(),
        weighted: spec.weights.is_some(),
        fixed_zero: None,
    })
}

/// Builds the variant over every upper-triangle position, with the positions
/// outside the pattern of `C` pinned to zero. Its constraint matrix is that of
/// a fully dense pattern, which admits the closed-form reduced inverse.
pub fn build_full_reduced_problem(spec: &ProblemSpec) -> Result<ReducedProblem> {
    let n = spec.matrix.n();
    let m = n * (n + 1) / 2;
    let mut rows = Vec::with_capacity(m);
    let mut cols = Vec::with_capacity(m);
    let mut c = vec![0.0; m];
    let mut p = Vec::with_capacity(m);
    let mut fixed = vec![true; m];
    let mut offset = 0;
    for j in 0..n {
        for i in 0..=j {
            rows.push(i);
            cols.push(j);
            let w = spec
                .weights
                .as_ref()
                .map(|w| w.get(i, j))
                .filter(|&w| w > 0.0)
                .unwrap_or(1.0);
            p.push(scale_factor(i, j) * w);
        }
        let col_start = offset;
        offset += j + 1;
        let mat = &spec.matrix;
        for k in mat.col_ptr()[j]..mat.col_ptr()[j + 1] {
            let i = mat.row_indices()[k];
            let v = mat.values()[k];
            c[col_start + i] = if i == j { 0.5 * v } else { v };
            fixed[col_start + i] = false;
        }
    }
    Ok(ReducedProblem {
        n,
        rows,
        cols,
        c,
        p,
        target: spec.target.clone(),
        weighted: spec.weights.is_some(),
        fixed_zero: Some(fixed),
    })
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

impl ReducedProblem {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of reduced variables.
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// `(row, col)` of component `k`.
    pub fn position(&self, k: usize) -> (usize, usize) {
        (self.rows[k], self.cols[k])
    }

    pub fn index_map(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().copied().zip(self.cols.iter().copied())
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn fixed_zero(&self) -> Option<&[bool]> {
        self.fixed_zero.as_deref()
    }

    /// True when the index map covers the whole upper triangle.
    pub fn is_dense(&self) -> bool {
        self.m() == self.n * (self.n + 1) / 2
    }

    /// Pattern of the variables, i.e. of the reduced system minus the identity.
    pub fn pattern(&self) -> Pattern {
        Pattern::from_upper(self.n, self.index_map().collect())
    }

    /// Nonzeros of the full symmetric pattern plus the missing diagonal.
    pub fn reduced_system_nnz(&self) -> usize {
        let diag = self.index_map().filter(|(i, j)| i == j).count();
        2 * (self.m() - diag) + self.n
    }

    /// `out = A x`: the row sums of the symmetric matrix encoded by `x`.
    pub fn apply_a_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.m());
        debug_assert_eq!(out.len(), self.n);
        out.fill(0.0);
        for ((&i, &j), &xk) in self.rows.iter().zip(&self.cols).zip(x) {
            if i == j {
                out[i] += 2.0 * xk;
            } else {
                out[i] += xk;
                out[j] += xk;
            }
        }
    }

    /// `out = A^T v`.
    pub fn apply_at_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n);
        debug_assert_eq!(out.len(), self.m());
        for ((&i, &j), o) in self.rows.iter().zip(&self.cols).zip(out.iter_mut()) {
            *o = if i == j { 2.0 * v[i] } else { v[i] + v[j] };
        }
    }

    pub fn apply_a(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.m(), x.len())?;
        let mut out = vec![0.0; self.n];
        self.apply_a_into(x, &mut out);
        Ok(out)
    }

    pub fn apply_at(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, v.len())?;
        let mut out = vec![0.0; self.m()];
        self.apply_at_into(v, &mut out);
        Ok(out)
    }

    /// `1/2 ||p .* (x - c)||^2`, equal to `1/2 ||W .* (X - C)||_F^2`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        0.5 * x
            .iter()
            .zip(&self.c)
            .zip(&self.p)
            .map(|((x, c), p)| {
                let d = p * (x - c);
                d * d
            })
            .sum::<f64>()
    }

    /// Reduced coordinates of a symmetric `X` supported on the variables.
    pub fn reduce(&self, x: &SymmetricSparseMatrix) -> Result<Vec<f64>> {
        check_len(self.n, x.n())?;
        let mut out = vec![0.0; self.m()];
        let mut k = 0;
        for (i, j, v) in x.iter() {
            // both listings are column-major, so a merge suffices
            while k < self.m() && (self.cols[k], self.rows[k]) < (j, i) {
                k += 1;
            }
            if k == self.m() || (self.rows[k], self.cols[k]) != (i, j) {
                return Err(Error::Specification(format!(
                    "entry ({}, {}) lies outside the pattern",
                    i + 1,
                    j + 1
                )));
            }
            out[k] = if i == j { 0.5 * v } else { v };
        }
        Ok(out)
    }

    /// Rebuilds `X = X_u + X_u^T` from reduced coordinates. Exact zeros are
    /// dropped from the result.
    pub fn recover(&self, x: &[f64]) -> Result<SymmetricSparseMatrix> {
        check_len(self.m(), x.len())?;
        let triplets = self
            .index_map()
            .zip(x)
            .filter(|&(_, &v)| v != 0.0)
            .map(|((i, j), &v)| (i, j, if i == j { 2.0 * v } else { v }));
        SymmetricSparseMatrix::from_triplets(self.n, triplets, &ValidationOptions::default())
    }
}

/// Symmetric embedding `[[0, C], [C^T, 0]]` of an `r x k` matrix.
pub fn embed_nonsymmetric(c: &CooMatrix) -> Result<SymmetricSparseMatrix> {
    let offset = c.nrows;
    let opts = ValidationOptions {
        duplicate_policy: DuplicatePolicy::Sum,
        ..Default::default()
    };
    SymmetricSparseMatrix::from_triplets(
        c.nrows + c.ncols,
        c.entries.iter().map(|&(i, j, v)| (i, offset + j, v)),
        &opts,
    )
}

/// Top-right `nrows x ncols` block of an embedding built by [`embed_nonsymmetric`].
pub fn extract_embedded_block(x: &SymmetricSparseMatrix, nrows: usize, ncols: usize) -> CooMatrix {
    let mut entries: Vec<(usize, usize, f64)> = x
        .iter()
        .filter(|&(i, j, _)| i < nrows && j >= nrows)
        .map(|(i, j, v)| (i, j - nrows, v))
        .collect();
    entries.sort_by_key(|&(i, j, _)| (j, i));
    CooMatrix {
        nrows,
        ncols,
        entries,
    }
}
