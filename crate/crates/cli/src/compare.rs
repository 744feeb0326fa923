use std::collections::HashMap;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::Args;
use dsproj_core::{
    sinkhorn_balance, solve, zass_normalize, DenseMatrix, ProblemSpec, Status, SymmetricSparseMatrix,
};
use serde::Serialize;

use crate::input::{load, TargetArg};
use crate::summary::{write_csv_file, write_summaries, ConfigEcho, RunSummary};
use crate::{exit_code, ReadArgs, SolverArgs, EXIT_OK};

#[derive(Args, Debug)]
pub struct CompareArgs {
    pub input: PathBuf,
    /// Comma-separated subset of admm, zass, sinkhorn.
    #[arg(long, value_delimiter = ',', default_value = "admm,zass,sinkhorn")]
    pub methods: Vec<String>,
    /// CSV of (method, iter, r_prim, objective).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// JSON-lines summary, one line per method.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long, default_value = "one")]
    pub target: String,
    /// Largest order for which the dense Zass-Shashua method is attempted.
    #[arg(long, default_value_t = 20_000)]
    pub zass_cap: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub read: ReadArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Admm,
    Zass,
    Sinkhorn,
}

impl Method {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "admm" => Method::Admm,
            "zass" => Method::Zass,
            "sinkhorn" => Method::Sinkhorn,
            other => bail!("unknown method {other:?} (expected admm, zass or sinkhorn)"),
        })
    }

    fn name(self) -> &'static str {
        match self {
            Method::Admm => "admm",
            Method::Zass => "zass",
            Method::Sinkhorn => "sinkhorn",
        }
    }
}

#[derive(Serialize)]
struct TraceCsvRow {
    method: &'static str,
    iter: usize,
    r_prim: f64,
    objective: f64,
}

/// Full (both triangles) nonzero listing of a result.
type Entries = Vec<(usize, usize, f64)>;

fn sparse_entries(m: &SymmetricSparseMatrix) -> Entries {
    let mut out = Vec::with_capacity(m.nnz());
    for (i, j, v) in m.iter() {
        out.push((i, j, v));
        if i != j {
            out.push((j, i, v));
        }
    }
    out
}

fn dense_entries(m: &DenseMatrix) -> Entries {
    let n = m.n();
    m.data()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(k, &v)| (k / n, k % n, v))
        .collect()
}

/// `||A - B||_inf`, maximum absolute row sum, without forming dense matrices.
fn induced_gap(n: usize, a: &Entries, b: &Entries) -> f64 {
    let mut diff: HashMap<(usize, usize), f64> = HashMap::with_capacity(a.len() + b.len());
    for &(i, j, v) in a {
        *diff.entry((i, j)).or_default() += v;
    }
    for &(i, j, v) in b {
        *diff.entry((i, j)).or_default() -= v;
    }
    let mut rows = vec![0.0; n];
    for ((i, _), d) in diff {
        rows[i] += d.abs();
    }
    rows.into_iter().fold(0.0, f64::max)
}

struct MethodRun {
    method: Method,
    status: Status,
    iterations: usize,
    r_prim: f64,
    r_dual: Option<f64>,
    objective: f64,
    seconds: f64,
    entries: Entries,
}

pub fn run(args: &CompareArgs) -> Result<u8> {
    let methods = args.methods.iter().map(|s| Method::parse(s)).collect::<Result<Vec<_>>>()?;
    if methods.is_empty() {
        bail!("no methods given");
    }
    let loaded = load(&args.input, &args.read.options(), false)?;
    let c = &loaded.matrix;
    let n = c.n();
    if n == 0 {
        bail!("the input matrix is empty");
    }
    let target_arg = TargetArg::parse(&args.target);
    let target = target_arg.resolve(&loaded)?;
    let tau = target[0];
    let uniform = target.iter().all(|&t| t == tau);
    if methods.contains(&Method::Zass) {
        if n > args.zass_cap {
            bail!(
                "refusing to run zass on n = {n}: it works on dense n x n matrices and the cap is {} (see --zass-cap)",
                args.zass_cap
            );
        }
        if !uniform {
            bail!("zass supports only a uniform row-sum target");
        }
    }
    let cfg = args.solver.config(true, 1);
    let spec = ProblemSpec::new(c.clone()).with_target(target.clone())?;

    let mut runs = Vec::new();
    let mut trace = Vec::new();
    let mut code = EXIT_OK;
    for &method in &methods {
        let start = Instant::now();
        let run = match method {
            Method::Admm => {
                let sol = solve(&spec, &cfg)?;
                if sol.status == Status::InfeasibleInput {
                    eprintln!("dsproj: admm: the pattern supports no doubly stochastic matrix");
                }
                code = code.max(exit_code(sol.status));
                trace.extend(sol.trace.iter().map(|t| TraceCsvRow {
                    method: "admm",
                    iter: t.iter,
                    r_prim: t.r_prim,
                    objective: t.objective,
                }));
                MethodRun {
                    method,
                    status: sol.status,
                    iterations: sol.iterations,
                    r_prim: sol.residuals.r_prim,
                    r_dual: Some(sol.residuals.r_dual),
                    objective: sol.objective,
                    seconds: 0.0,
                    entries: sparse_entries(&sol.x),
                }
            }
            Method::Zass => {
                // the method targets unit sums; scale in and out
                let scaled = DenseMatrix::from_sparse(&c.scaled(1.0 / tau));
                let res = zass_normalize(&scaled, cfg.eps_abs / tau, cfg.max_iters);
                trace.extend(res.trace.iter().map(|t| TraceCsvRow {
                    method: "zass",
                    iter: t.iter,
                    r_prim: t.r_prim * tau,
                    objective: t.objective * tau * tau,
                }));
                let x = DenseMatrix::new(n, res.x.data().iter().map(|v| v * tau).collect())?;
                let objective = x.half_sq_distance(&DenseMatrix::from_sparse(c));
                MethodRun {
                    method,
                    status: if res.converged { Status::Solved } else { Status::MaxIters },
                    iterations: res.iterations,
                    r_prim: res.final_primal_residual * tau,
                    r_dual: None,
                    objective,
                    seconds: 0.0,
                    entries: dense_entries(&x),
                }
            }
            Method::Sinkhorn => match sinkhorn_balance(c, &target, cfg.eps_abs, cfg.max_iters) {
                Ok(res) => {
                    trace.extend(res.trace.iter().map(|t| TraceCsvRow {
                        method: "sinkhorn",
                        iter: t.iter,
                        r_prim: t.r_prim,
                        objective: t.objective,
                    }));
                    let objective = res.trace.last().map_or(0.0, |t| t.objective);
                    MethodRun {
                        method,
                        status: if res.converged { Status::Solved } else { Status::MaxIters },
                        iterations: res.iterations,
                        r_prim: res.final_primal_residual,
                        r_dual: None,
                        objective,
                        seconds: 0.0,
                        entries: sparse_entries(&res.x),
                    }
                }
                Err(e) => {
                    eprintln!("dsproj: sinkhorn skipped: {e}");
                    continue;
                }
            },
        };
        runs.push(MethodRun {
            seconds: start.elapsed().as_secs_f64(),
            ..run
        });
    }

    println!(
        "{:<10} {:<16} {:>10} {:>12} {:>14} {:>10}",
        "method", "status", "iterations", "r_prim", "objective", "seconds"
    );
    for r in &runs {
        println!(
            "{:<10} {:<16} {:>10} {:>12.4e} {:>14.6e} {:>10.3}",
            r.method.name(),
            r.status.as_str(),
            r.iterations,
            r.r_prim,
            r.objective,
            r.seconds
        );
    }
    for (k, a) in runs.iter().enumerate() {
        for b in &runs[k + 1..] {
            println!(
                "gap {} {} {:.6e}",
                a.method.name(),
                b.method.name(),
                induced_gap(n, &a.entries, &b.entries)
            );
        }
    }

    if let Some(path) = &args.trace {
        write_csv_file(path, &["method", "iter", "r_prim", "objective"], &trace)?;
    }
    if let Some(path) = &args.summary {
        let rows: Vec<RunSummary> = runs
            .iter()
            .map(|r| RunSummary {
                input_path: args.input.display().to_string(),
                n,
                nnz: c.nnz(),
                method: r.method.name().into(),
                status: r.status.as_str().into(),
                iterations: r.iterations,
                r_prim: r.r_prim,
                r_dual: r.r_dual,
                objective: r.objective,
                wall_time_seconds: r.seconds,
                config: ConfigEcho {
                    rho: cfg.rho,
                    sigma: cfg.sigma,
                    alpha: cfg.alpha,
                    tol: cfg.eps_abs,
                    max_iters: cfg.max_iters,
                    check_interval: cfg.check_interval,
                    backend: cfg.backend.kind.as_str().into(),
                    target: target_arg.label(),
                    weighted: false,
                    nonsymmetric: false,
                },
            })
            .collect();
        write_summaries(path, &rows)?;
    }
    Ok(code)
}
