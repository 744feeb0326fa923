//! Up-looking sparse Cholesky factorization `P M P^T = L L^T`.

use crate::error::{Error, Result};

use super::UpperCsc;

const NONE: usize = usize::MAX;

/// Symmetric permutation applied before factorizing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Ordering {
    Natural,
    /// Approximate minimum degree.
    #[default]
    Amd,
}

/// `perm[new] = old` for the chosen ordering of an upper-triangle pattern.
pub fn fill_reducing_permutation(m: &UpperCsc, ordering: Ordering) -> Vec<usize> {
    let n = m.n;
    match ordering {
        Ordering::Natural => (0..n).collect(),
        Ordering::Amd => {
            let col_ptr: Vec<i64> = m.col_ptr.iter().map(|&p| p as i64).collect();
            let row_idx: Vec<i64> = m.row_idx.iter().map(|&i| i as i64).collect();
            match amd::order(n as i64, &col_ptr, &row_idx, &amd::Control::default()) {
                Ok((perm, _, _)) => perm.into_iter().map(|p| p as usize).collect(),
                // The input comes from our own assembly; fall back rather than fail.
                Err(_) => (0..n).collect(),
            }
        }
    }
}

/// Lower-triangular factor in compressed columns together with its permutation.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    n: usize,
    perm: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Elimination tree of an upper-triangle CSC pattern.
fn elimination_tree(n: usize, col_ptr: &[usize], row_idx: &[usize]) -> Vec<usize> {
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for &row in &row_idx[col_ptr[k]..col_ptr[k + 1]] {
            let mut i = row;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L`, written to `stack[top..]`.
fn row_pattern(
    k: usize,
    col_ptr: &[usize],
    row_idx: &[usize],
    parent: &[usize],
    stack: &mut [usize],
    mark: &mut [usize],
) -> usize {
    let n = parent.len();
    let mut top = n;
    mark[k] = k;
    for &row in &row_idx[col_ptr[k]..col_ptr[k + 1]] {
        if row > k {
            continue;
        }
        let mut i = row;
        let mut len = 0;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            len -= 1;
            top -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

impl CholeskyFactor {
    /// Factorizes the symmetric positive definite matrix stored in `m`.
    pub fn new(m: &UpperCsc, ordering: Ordering) -> Result<Self> {
        let perm = fill_reducing_permutation(m, ordering);
        Self::with_permutation(m, perm)
    }

    pub fn with_permutation(m: &UpperCsc, perm: Vec<usize>) -> Result<Self> {
        let n = m.n;
        let mut pinv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            pinv[old] = new;
        }

        // Permuted upper triangle C = P M P^T.
        let mut counts = vec![0usize; n + 1];
        for j in 0..n {
            for &i in &m.row_idx[m.col_ptr[j]..m.col_ptr[j + 1]] {
                counts[pinv[i].max(pinv[j]) + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let c_ptr = counts.clone();
        let mut next = counts;
        let mut c_idx = vec![0usize; m.nnz()];
        let mut c_val = vec![0.0; m.nnz()];
        for j in 0..n {
            for k in m.col_ptr[j]..m.col_ptr[j + 1] {
                let (a, b) = (pinv[m.row_idx[k]], pinv[j]);
                let col = a.max(b);
                c_idx[next[col]] = a.min(b);
                c_val[next[col]] = m.values[k];
                next[col] += 1;
            }
        }

        let parent = elimination_tree(n, &c_ptr, &c_idx);
        let mut stack = vec![0usize; n];
        let mut mark = vec![NONE; n];

        // Column counts of L from the row patterns.
        let mut l_counts = vec![1usize; n];
        for k in 0..n {
            let top = row_pattern(k, &c_ptr, &c_idx, &parent, &mut stack, &mut mark);
            for &i in &stack[top..] {
                l_counts[i] += 1;
            }
        }
        let mut l_ptr = vec![0usize; n + 1];
        for j in 0..n {
            l_ptr[j + 1] = l_ptr[j] + l_counts[j];
        }
        let mut l_idx = vec![0usize; l_ptr[n]];
        let mut l_val = vec![0.0; l_ptr[n]];
        // Slot 0 of every column is reserved for the diagonal.
        let mut fill: Vec<usize> = l_ptr[..n].iter().map(|&p| p + 1).collect();

        mark.fill(NONE);
        let mut x = vec![0.0; n];
        for k in 0..n {
            let top = row_pattern(k, &c_ptr, &c_idx, &parent, &mut stack, &mut mark);
            for p in c_ptr[k]..c_ptr[k + 1] {
                x[c_idx[p]] += c_val[p];
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &stack[top..] {
                let lki = x[i] / l_val[l_ptr[i]];
                x[i] = 0.0;
                for p in l_ptr[i] + 1..fill[i] {
                    x[l_idx[p]] -= l_val[p] * lki;
                }
                d -= lki * lki;
                l_idx[fill[i]] = k;
                l_val[fill[i]] = lki;
                fill[i] += 1;
            }
            if !(d > 0.0) {
                return Err(Error::NumericalBreakdown { column: k, pivot: d });
            }
            l_idx[l_ptr[k]] = k;
            l_val[l_ptr[k]] = d.sqrt();
        }

        Ok(Self {
            n,
            perm,
            col_ptr: l_ptr,
            row_idx: l_idx,
            values: l_val,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Stored entries of `L`.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of `L` as `(row, col, value)` in the permuted numbering.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |j| {
            (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |p| (self.row_idx[p], j, self.values[p]))
        })
    }

    /// Solves `M x = b` in place; `work` must have length `n`.
    pub fn solve_in_place(&self, b: &mut [f64], work: &mut [f64]) {
        let n = self.n;
        for (new, &old) in self.perm.iter().enumerate() {
            work[new] = b[old];
        }
        // L y = b
        for j in 0..n {
            let start = self.col_ptr[j];
            work[j] /= self.values[start];
            let yj = work[j];
            for p in start + 1..self.col_ptr[j + 1] {
                work[self.row_idx[p]] -= self.values[p] * yj;
            }
        }
        // L^T x = y
        for j in (0..n).rev() {
            let start = self.col_ptr[j];
            let mut s = work[j];
            for p in start + 1..self.col_ptr[j + 1] {
                s -= self.values[p] * work[self.row_idx[p]];
            }
            work[j] = s / self.values[start];
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = work[new];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        let mut work = vec![0.0; self.n];
        self.solve_in_place(&mut x, &mut work);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn upper_from_dense(n: usize, dense: &[f64]) -> UpperCsc {
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for j in 0..n {
            for i in 0..=j {
                if dense[i * n + j] != 0.0 {
                    row_idx.push(i);
                    values.push(dense[i * n + j]);
                }
            }
            col_ptr.push(row_idx.len());
        }
        UpperCsc {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    #[test]
    fn scaled_identity() {
        let m = upper_from_dense(3, &[2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 2.0]);
        let f = CholeskyFactor::new(&m, Ordering::Amd).unwrap();
        let entries: Vec<_> = f.entries().collect();
        assert_eq!(entries.len(), 3);
        for (i, j, v) in entries {
            assert_eq!(i, j);
            assert!((v - 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn two_by_two() {
        let m = upper_from_dense(2, &[2.5, 0.5, 0.5, 2.5]);
        let f = CholeskyFactor::new(&m, Ordering::Natural).unwrap();
        let z = f.solve(&[1.0, 1.0]);
        assert!((z[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((z[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn breakdown_on_indefinite() {
        let m = upper_from_dense(2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            CholeskyFactor::new(&m, Ordering::Natural),
            Err(Error::NumericalBreakdown { column: 1, .. })
        ));
    }

    #[test]
    fn arrow_matrix_fill() {
        // Dense first row/column: natural order fills completely, AMD does not.
        let n = 30;
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            dense[i * n + i] = n as f64;
            dense[i] = 1.0;
            dense[i * n] = 1.0;
        }
        dense[0] = n as f64;
        let m = upper_from_dense(n, &dense);
        let natural = CholeskyFactor::new(&m, Ordering::Natural).unwrap();
        let amd = CholeskyFactor::new(&m, Ordering::Amd).unwrap();
        assert_eq!(natural.nnz(), n * (n + 1) / 2);
        assert_eq!(amd.nnz(), 2 * n - 1);
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
        let x1 = natural.solve(&b);
        let x2 = amd.solve(&b);
        for (a, b) in x1.iter().zip(&x2) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
