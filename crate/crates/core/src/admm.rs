//! ADMM on the reduced problem
//! `min 1/2 ||p .* (x - c)||^2  s.t.  A x = r,  x >= 0`
//! split as `x = x_tilde` (multiplier `w`, step `sigma`) and `z = A x_tilde`
//! (multiplier `y`, step `rho`).

use std::time::Instant;

use crate::error::{Error, Result};
use crate::feasibility::{feasibility_check, FeasibilityCertificate};
use crate::linear::{BackendKind, KktSystem, LinearBackend};
use crate::matrix::{pattern_of, SymmetricSparseMatrix};
use crate::reformulation::{build_full_reduced_problem, build_reduced_problem, ProblemSpec, ReducedProblem};

/// Which set of reduced variables is optimized over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Formulation {
    /// One variable per stored upper-triangle entry of `C`.
    #[default]
    Sparse,
    /// One variable per upper-triangle position, those outside the pattern
    /// pinned to zero by the projection. The KKT matrix is then that of a
    /// dense pattern.
    FullTriangle,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub rho: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub eps_abs: f64,
    /// Added to `eps_abs` after scaling by the magnitude of the residual terms.
    pub eps_rel: f64,
    pub max_iters: usize,
    pub check_interval: usize,
    pub backend: LinearBackend,
    pub formulation: Formulation,
    pub record_trace: bool,
    /// Start from the symmetrized permutation found by the feasibility check
    /// instead of zero.
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 10.0,
            sigma: 10.0,
            alpha: 1.6,
            eps_abs: 1e-4,
            eps_rel: 0.0,
            max_iters: 100_000,
            check_interval: 25,
            backend: LinearBackend::default(),
            formulation: Formulation::Sparse,
            record_trace: false,
            warm_start: false,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(eps_abs: f64) -> Self {
        Self {
            eps_abs,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return fail("rho must be positive");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return fail("sigma must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return fail("alpha must lie in (0, 2)");
        }
        if !(self.eps_abs >= 0.0 && self.eps_rel >= 0.0) {
            return fail("tolerances must be nonnegative");
        }
        if self.max_iters == 0 {
            return fail("max_iters must be at least 1");
        }
        if self.check_interval == 0 {
            return fail("check_interval must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    pub y: Vec<f64>,
    pub x_tilde: Vec<f64>,
    pub z_tilde: Vec<f64>,
    pub iter: usize,
}

impl SolverState {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            x: vec![0.0; m],
            z: vec![0.0; n],
            w: vec![0.0; m],
            y: vec![0.0; n],
            x_tilde: vec![0.0; m],
            z_tilde: vec![0.0; n],
            iter: 0,
        }
    }

    fn check_dims(&self, rp: &ReducedProblem) -> Result<()> {
        for (expected, actual) in [
            (rp.m(), self.x.len()),
            (rp.m(), self.w.len()),
            (rp.m(), self.x_tilde.len()),
            (rp.n(), self.z.len()),
            (rp.n(), self.y.len()),
            (rp.n(), self.z_tilde.len()),
        ] {
            if expected != actual {
                return Err(Error::DimensionMismatch { expected, actual });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Residuals {
    pub r_prim: f64,
    pub r_dual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Solved,
    MaxIters,
    InfeasibleInput,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Solved => "solved",
            Status::MaxIters => "max-iters",
            Status::InfeasibleInput => "infeasible-input",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub r_prim: f64,
    pub r_dual: f64,
    pub objective: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub backend: BackendKind,
    pub setup_seconds: f64,
    pub iterate_seconds: f64,
    pub factorizations: usize,
    pub cg_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: SymmetricSparseMatrix,
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub status: Status,
    pub trace: Vec<TraceRow>,
    pub certificate: FeasibilityCertificate,
    /// Final iterates; absent for infeasible input.
    pub state: Option<SolverState>,
    pub stats: Option<SolveStats>,
}

fn inf_norm(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |acc, x| acc.max(x.abs()))
}

/// `r_prim = ||A x - r||_inf`, `r_dual = ||P (x - c) + A^T y + w||_inf`.
pub fn compute_residuals(state: &SolverState, rp: &ReducedProblem) -> Residuals {
    let mut ax = vec![0.0; rp.n()];
    rp.apply_a_into(&state.x, &mut ax);
    let r_prim = inf_norm(ax.iter().zip(rp.target()).map(|(a, r)| a - r));
    let mut aty = vec![0.0; rp.m()];
    rp.apply_at_into(&state.y, &mut aty);
    let r_dual = inf_norm((0..rp.m()).map(|k| {
        let p2 = rp.p()[k] * rp.p()[k];
        p2 * (state.x[k] - rp.c()[k]) + aty[k] + state.w[k]
    }));
    Residuals { r_prim, r_dual }
}

/// Tolerances `(prim, dual)` for the current state.
fn tolerances(state: &SolverState, rp: &ReducedProblem, cfg: &SolverConfig) -> (f64, f64) {
    if cfg.eps_rel == 0.0 {
        return (cfg.eps_abs, cfg.eps_abs);
    }
    let ax = rp.apply_a(&state.x).unwrap_or_default();
    let aty = rp.apply_at(&state.y).unwrap_or_default();
    let prim_scale = inf_norm(ax.into_iter()).max(inf_norm(rp.target().iter().copied()));
    let px = inf_norm(state.x.iter().zip(rp.p()).map(|(x, p)| p * p * x));
    let pc = inf_norm(rp.c().iter().zip(rp.p()).map(|(c, p)| p * p * c));
    let dual_scale = px.max(pc).max(inf_norm(aty.into_iter())).max(inf_norm(state.w.iter().copied()));
    (cfg.eps_abs + cfg.eps_rel * prim_scale, cfg.eps_abs + cfg.eps_rel * dual_scale)
}

fn converged(res: &Residuals, tol: (f64, f64)) -> bool {
    res.r_prim <= tol.0 && res.r_dual <= tol.1
}

fn step_with(
    state: &mut SolverState,
    rp: &ReducedProblem,
    cfg: &SolverConfig,
    kkt: &mut KktSystem,
    rhs: &mut [f64],
    scratch_n: &mut [f64],
) -> Result<()> {
    let (rho, sigma, alpha) = (cfg.rho, cfg.sigma, cfg.alpha);

    for ((s, z), y) in scratch_n.iter_mut().zip(&state.z).zip(&state.y) {
        *s = rho * z - y;
    }
    rp.apply_at_into(scratch_n, rhs);
    for k in 0..rp.m() {
        let p = rp.p()[k];
        rhs[k] += sigma * state.x[k] - state.w[k] + p * p * rp.c()[k];
    }
    kkt.solve_into(rp, rhs, &mut state.x_tilde, &mut state.z_tilde)?;

    let fixed = rp.fixed_zero();
    for k in 0..rp.m() {
        let relaxed = alpha * state.x_tilde[k] + (1.0 - alpha) * state.x[k];
        let next = if fixed.is_some_and(|f| f[k]) {
            0.0
        } else {
            (relaxed + state.w[k] / sigma).max(0.0)
        };
        state.w[k] += sigma * (relaxed - next);
        state.x[k] = next;
    }
    for i in 0..rp.n() {
        let relaxed = alpha * state.z_tilde[i] + (1.0 - alpha) * state.z[i];
        let next = rp.target()[i];
        state.y[i] += rho * (relaxed - next);
        state.z[i] = next;
    }

    state.iter += 1;
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
    if !(finite(&state.x) && finite(&state.w) && finite(&state.y)) {
        return Err(Error::Divergence(state.iter));
    }
    Ok(())
}

/// One ADMM iteration in place.
pub fn admm_step(state: &mut SolverState, rp: &ReducedProblem, cfg: &SolverConfig, kkt: &mut KktSystem) -> Result<()> {
    state.check_dims(rp)?;
    let mut rhs = vec![0.0; rp.m()];
    let mut scratch = vec![0.0; rp.n()];
    step_with(state, rp, cfg, kkt, &mut rhs, &mut scratch)
}

/// Result of [`AdmmSolver::run`].
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub status: Status,
    pub residuals: Residuals,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
}

/// ADMM iteration over a fixed reduced problem, with the KKT solver set up once.
pub struct AdmmSolver {
    rp: ReducedProblem,
    cfg: SolverConfig,
    kkt: KktSystem,
    state: SolverState,
    rhs: Vec<f64>,
    scratch_n: Vec<f64>,
    setup_seconds: f64,
}

impl AdmmSolver {
    pub fn new(rp: ReducedProblem, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let start = Instant::now();
        let kkt = KktSystem::new(&rp, cfg.rho, cfg.sigma, &cfg.backend)?;
        let setup_seconds = start.elapsed().as_secs_f64();
        let (m, n) = (rp.m(), rp.n());
        Ok(Self {
            rp,
            cfg,
            kkt,
            state: SolverState::zeros(m, n),
            rhs: vec![0.0; m],
            scratch_n: vec![0.0; n],
            setup_seconds,
        })
    }

    pub fn problem(&self) -> &ReducedProblem {
        &self.rp
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn kkt(&self) -> &KktSystem {
        &self.kkt
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn set_state(&mut self, state: SolverState) -> Result<()> {
        state.check_dims(&self.rp)?;
        self.state = state;
        Ok(())
    }

    pub fn into_state(self) -> SolverState {
        self.state
    }

    pub fn setup_seconds(&self) -> f64 {
        self.setup_seconds
    }

    pub fn residuals(&self) -> Residuals {
        compute_residuals(&self.state, &self.rp)
    }

    pub fn step(&mut self) -> Result<()> {
        step_with(
            &mut self.state,
            &self.rp,
            &self.cfg,
            &mut self.kkt,
            &mut self.rhs,
            &mut self.scratch_n,
        )
    }

    fn trace_row(&self, res: &Residuals) -> TraceRow {
        TraceRow {
            iter: self.state.iter,
            r_prim: res.r_prim,
            r_dual: res.r_dual,
            objective: self.rp.objective(&self.state.x),
        }
    }

    /// Iterates until the residuals meet the tolerance or `max_iters` steps
    /// have been taken. Residuals are evaluated every `check_interval` steps
    /// and after the last one.
    pub fn run(&mut self) -> Result<RunOutcome> {
        let mut trace = Vec::new();
        let start_iter = self.state.iter;
        let mut res = self.residuals();
        loop {
            let done = self.state.iter - start_iter;
            if done == self.cfg.max_iters {
                break;
            }
            self.step()?;
            let done = done + 1;
            if done % self.cfg.check_interval == 0 || done == self.cfg.max_iters {
                res = self.residuals();
                if self.cfg.record_trace {
                    trace.push(self.trace_row(&res));
                }
                if converged(&res, tolerances(&self.state, &self.rp, &self.cfg)) {
                    return Ok(RunOutcome {
                        status: Status::Solved,
                        residuals: res,
                        iterations: done,
                        trace,
                    });
                }
            }
        }
        Ok(RunOutcome {
            status: Status::MaxIters,
            residuals: res,
            iterations: self.state.iter - start_iter,
            trace,
        })
    }
}

fn build_problem(spec: &ProblemSpec, formulation: Formulation) -> Result<ReducedProblem> {
    match formulation {
        Formulation::Sparse => build_reduced_problem(spec),
        Formulation::FullTriangle => build_full_reduced_problem(spec),
    }
}

/// State at which `C` itself is tested for optimality: `x = c`, zero multipliers.
fn input_state(rp: &ReducedProblem) -> SolverState {
    let mut state = SolverState::zeros(rp.m(), rp.n());
    state.x.copy_from_slice(rp.c());
    state.z.copy_from_slice(rp.target());
    state
}

/// Nearest doubly stochastic matrix (row sums equal to the target) on the
/// pattern of the input.
pub fn solve(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    let n = spec.matrix().n();
    let certificate = feasibility_check(&pattern_of(spec.matrix()));
    if !certificate.feasible {
        let rp = build_reduced_problem(spec)?;
        let zero = SolverState::zeros(rp.m(), n);
        return Ok(Solution {
            x: SymmetricSparseMatrix::zeros(n),
            objective: rp.objective(&zero.x),
            residuals: compute_residuals(&zero, &rp),
            iterations: 0,
            status: Status::InfeasibleInput,
            trace: Vec::new(),
            certificate,
            state: None,
            stats: None,
        });
    }

    let rp = build_problem(spec, cfg.formulation)?;

    // An input that already satisfies the constraints is its own projection.
    let at_input = input_state(&rp);
    let res = compute_residuals(&at_input, &rp);
    if converged(&res, tolerances(&at_input, &rp, cfg)) {
        let x = rp.recover(&at_input.x)?;
        let trace = if cfg.record_trace {
            vec![TraceRow {
                iter: 0,
                r_prim: res.r_prim,
                r_dual: res.r_dual,
                objective: 0.0,
            }]
        } else {
            Vec::new()
        };
        return Ok(Solution {
            x,
            objective: 0.0,
            residuals: res,
            iterations: 0,
            status: Status::Solved,
            trace,
            certificate,
            state: Some(at_input),
            stats: None,
        });
    }

    let mut solver = AdmmSolver::new(rp, *cfg)?;
    if cfg.warm_start {
        if let Some(point) = certificate.feasible_point(n) {
            let scale = spec.uniform_target().unwrap_or(1.0);
            let mut state = SolverState::zeros(solver.rp.m(), n);
            let x0 = solver.rp.reduce(&point.scaled(scale))?;
            state.x = x0;
            state.z.copy_from_slice(solver.rp.target());
            solver.set_state(state)?;
        }
    }
    let start = Instant::now();
    let outcome = solver.run()?;
    let iterate_seconds = start.elapsed().as_secs_f64();
    let stats = SolveStats {
        backend: solver.kkt.kind(),
        setup_seconds: solver.setup_seconds,
        iterate_seconds,
        factorizations: solver.kkt.factorizations(),
        cg_iterations: solver.kkt.cg_iterations(),
    };
    let objective = solver.rp.objective(&solver.state.x);
    let x = solver.rp.recover(&solver.state.x)?;
    Ok(Solution {
        x,
        objective,
        residuals: outcome.residuals,
        iterations: outcome.iterations,
        status: outcome.status,
        trace: outcome.trace,
        certificate,
        state: Some(solver.into_state()),
        stats: Some(stats),
    })
}
