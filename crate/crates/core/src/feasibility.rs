//! Feasibility of a sparsity pattern.
//!
//! A doubly stochastic matrix supported on `S` exists iff `S` contains a
//! permutation, i.e. iff the bipartite row/column graph of `S` has a perfect
//! matching. The check runs Hopcroft-Karp on the full symmetric pattern.

use std::collections::VecDeque;

use crate::matrix::{Pattern, SymmetricSparseMatrix, ValidationOptions};

const NONE: usize = usize::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibilityCertificate {
    pub feasible: bool,
    /// `(row, col)` pairs, one per row, sorted by row. Present iff feasible.
    pub matching: Option<Vec<(usize, usize)>>,
    /// Rows whose neighborhood is smaller than the set itself. Present iff infeasible.
    pub deficient_set: Option<Vec<usize>>,
}

impl FeasibilityCertificate {
    /// `(Q + Q^T) / 2` for the permutation matrix `Q` of the matching: a
    /// symmetric doubly stochastic matrix supported on the pattern.
    pub fn feasible_point(&self, n: usize) -> Option<SymmetricSparseMatrix> {
        let matching = self.matching.as_ref()?;
        let triplets = matching.iter().map(|&(i, j)| if i == j { (i, j, 1.0) } else { (i, j, 0.5) });
        let opts = ValidationOptions {
            duplicate_policy: crate::matrix::DuplicatePolicy::Sum,
            ..Default::default()
        };
        // (i, j) and (j, i) may both be matched; summing gives the full entry.
        SymmetricSparseMatrix::from_triplets(n, triplets, &opts).ok()
    }
}

/// Maximum bipartite matching between `n` rows and `n` columns.
/// Returns `(col_of_row, row_of_col)` with `usize::MAX` for unmatched vertices.
pub fn maximum_matching<'a, F>(n: usize, adj: F) -> (Vec<usize>, Vec<usize>)
where
    F: Fn(usize) -> &'a [usize],
{
    let mut col_of = vec![NONE; n];
    let mut row_of = vec![NONE; n];
    let mut dist = vec![NONE; n];
    let mut next = vec![0usize; n];
    let mut queue = VecDeque::new();
    let mut stack = Vec::new();

    loop {
        queue.clear();
        for u in 0..n {
            if col_of[u] == NONE {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = NONE;
            }
        }
        let mut shortest = NONE;
        while let Some(u) = queue.pop_front() {
            if dist[u] >= shortest {
                continue;
            }
            for &v in adj(u) {
                let w = row_of[v];
                if w == NONE {
                    shortest = shortest.min(dist[u] + 1);
                } else if dist[w] == NONE {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if shortest == NONE {
            break;
        }

        next.fill(0);
        for s in 0..n {
            if col_of[s] != NONE {
                continue;
            }
            stack.clear();
            stack.push(s);
            while let Some(&u) = stack.last() {
                let nbrs = adj(u);
                if next[u] == nbrs.len() {
                    dist[u] = NONE;
                    stack.pop();
                    continue;
                }
                let v = nbrs[next[u]];
                next[u] += 1;
                let w = row_of[v];
                if w == NONE {
                    if dist[u] + 1 != shortest {
                        continue;
                    }
                    for &r in &stack {
                        let c = adj(r)[next[r] - 1];
                        col_of[r] = c;
                        row_of[c] = r;
                    }
                    break;
                } else if dist[w] != NONE && dist[w] == dist[u] + 1 {
                    stack.push(w);
                }
            }
        }
    }
    (col_of, row_of)
}

/// Rows reachable from the unmatched row `start` along alternating paths.
fn alternating_reach<'a, F>(n: usize, adj: F, start: usize, row_of: &[usize]) -> Vec<usize>
where
    F: Fn(usize) -> &'a [usize],
{
    let mut seen_row = vec![false; n];
    let mut seen_col = vec![false; n];
    let mut queue = VecDeque::from([start]);
    seen_row[start] = true;
    while let Some(u) = queue.pop_front() {
        for &v in adj(u) {
            if seen_col[v] {
                continue;
            }
            seen_col[v] = true;
            let w = row_of[v];
            if w != NONE && !seen_row[w] {
                seen_row[w] = true;
                queue.push_back(w);
            }
        }
    }
    (0..n).filter(|&i| seen_row[i]).collect()
}

pub fn feasibility_check(pattern: &Pattern) -> FeasibilityCertificate {
    let n = pattern.n();
    let adj = |i: usize| pattern.neighbors(i);
    let (col_of, row_of) = maximum_matching(n, adj);
    match col_of.iter().position(|&c| c == NONE) {
        None => FeasibilityCertificate {
            feasible: true,
            matching: Some(col_of.iter().enumerate().map(|(i, &j)| (i, j)).collect()),
            deficient_set: None,
        },
        Some(start) => FeasibilityCertificate {
            feasible: false,
            matching: None,
            deficient_set: Some(alternating_reach(n, adj, start, &row_of)),
        },
    }
}
