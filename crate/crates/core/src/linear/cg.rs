//! Preconditioned conjugate gradients for symmetric positive definite operators.

use crate::error::{Error, Result};

/// Outcome of a converged solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgInfo {
    pub iterations: usize,
    /// `||b - A x|| / ||b||` (absolute when `b = 0`).
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` with `x` holding the initial guess on entry.
///
/// `apply(v, out)` writes `A v` into `out`. `inv_diag`, when given, is the
/// Jacobi preconditioner `diag(A)^{-1}`. Stops once `||b - A x|| <= tol ||b||`.
pub fn cg_solve<F>(
    mut apply: F,
    inv_diag: Option<&[f64]>,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iters: usize,
) -> Result<CgInfo>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.fill(0.0);
        return Ok(CgInfo {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let threshold = tol * b_norm;

    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut r_norm = dot(&r, &r).sqrt();
    if r_norm <= threshold {
        return Ok(CgInfo {
            iterations: 0,
            relative_residual: r_norm / b_norm,
        });
    }

    let precondition = |r: &[f64], z: &mut [f64]| match inv_diag {
        Some(d) => z.iter_mut().zip(r).zip(d).for_each(|((z, r), d)| *z = r * d),
        None => z.copy_from_slice(r),
    };
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);

    for iter in 1..=max_iters {
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        r_norm = dot(&r, &r).sqrt();
        if r_norm <= threshold {
            return Ok(CgInfo {
                iterations: iter,
                relative_residual: r_norm / b_norm,
            });
        }
        precondition(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::IterativeSolver {
        iterations: max_iters,
        residual: r_norm / b_norm,
    })
}
