//! Closed-form inverse of the reduced system for a fully dense pattern.

/// For a fully dense unweighted pattern the reduced matrix equals
/// `alpha I + beta 1 1^T`; Sherman-Morrison inverts it in `O(n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DenseReducedInverse {
    n: usize,
    alpha: f64,
    beta: f64,
}

impl DenseReducedInverse {
    pub fn new(n: usize, rho: f64, sigma: f64) -> Self {
        let alpha =
            sigma * rho / ((2.0 + sigma / 2.0) * (2.0 + sigma)) + n as f64 * rho / (2.0 + sigma) + 1.0;
        let beta = rho / (2.0 + sigma);
        Self { n, alpha, beta }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `out = (alpha I + beta 1 1^T)^{-1} rhs`.
    pub fn apply_into(&self, rhs: &[f64], out: &mut [f64]) {
        let s: f64 = rhs.iter().sum();
        let shift = self.beta * s / (self.alpha + self.beta * self.n as f64);
        for (o, r) in out.iter_mut().zip(rhs) {
            *o = (r - shift) / self.alpha;
        }
    }

    pub fn apply(&self, rhs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; rhs.len()];
        self.apply_into(rhs, &mut out);
        out
    }

    /// `(alpha I + beta 1 1^T) v`.
    pub fn forward(&self, v: &[f64]) -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| self.alpha * x + self.beta * s).collect()
    }
}

/// `dense_inverse_apply` for a fully dense pattern of order `n`.
pub fn dense_inverse_apply(n: usize, rho: f64, sigma: f64, rhs: &[f64]) -> Vec<f64> {
    DenseReducedInverse::new(n, rho, sigma).apply(rhs)
}
