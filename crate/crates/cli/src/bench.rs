use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use dsproj_core::synthetic::banded;
use dsproj_core::{
    build_full_reduced_problem, build_reduced_problem, feasibility_check, pattern_of, AdmmSolver, Formulation,
    ProblemSpec, SolverConfig, Status, SymmetricSparseMatrix,
};
use serde::Serialize;

use crate::input::{read_symmetric, Loaded, TargetArg};
use crate::summary::{write_csv, write_csv_file};
use crate::{ReadArgs, SolverArgs, EXIT_OK};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Synthetic {
    Banded,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Directory whose `.mtx` files are run in name order.
    #[arg(conflicts_with = "synthetic")]
    pub dir: Option<PathBuf>,
    #[arg(long, value_enum, requires = "sizes")]
    pub synthetic: Option<Synthetic>,
    /// Orders of the synthetic matrices, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub bandwidth: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "one")]
    pub target: String,
    /// Run exactly this many iterations (no convergence test).
    #[arg(long)]
    pub fixed_iters: Option<usize>,
    /// CSV output; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub read: ReadArgs,
}

const HEADER: [&str; 18] = [
    "input",
    "n",
    "nnz",
    "method",
    "backend",
    "status",
    "iterations",
    "r_prim",
    "r_dual",
    "objective",
    "setup_seconds",
    "solve_seconds",
    "wall_time_seconds",
    "per_iteration_seconds",
    "rho",
    "sigma",
    "alpha",
    "tol",
];

#[derive(Debug, Serialize)]
pub struct BenchRow {
    input: String,
    n: usize,
    nnz: usize,
    method: &'static str,
    backend: &'static str,
    status: &'static str,
    iterations: usize,
    r_prim: f64,
    r_dual: f64,
    objective: f64,
    setup_seconds: f64,
    solve_seconds: f64,
    wall_time_seconds: f64,
    per_iteration_seconds: f64,
    rho: f64,
    sigma: f64,
    alpha: f64,
    tol: f64,
}

/// One timed ADMM run. Unlike `normalize`, this always iterates (there is
/// no shortcut for inputs that already satisfy the constraints), so the
/// per-iteration time is defined for every feasible instance.
fn bench_one(input: String, c: SymmetricSparseMatrix, target: &TargetArg, cfg: &SolverConfig) -> Result<BenchRow> {
    let start = Instant::now();
    let (n, nnz) = (c.n(), c.nnz());
    let loaded = Loaded {
        total: c.total_sum(),
        max_entry: c.max_value(),
        nrows: n,
        block: None,
        matrix: c,
    };
    let spec = ProblemSpec::new(loaded.matrix.clone()).with_target(target.resolve(&loaded)?)?;
    let mut row = BenchRow {
        input,
        n,
        nnz,
        method: "admm",
        backend: cfg.backend.kind.as_str(),
        status: Status::InfeasibleInput.as_str(),
        iterations: 0,
        r_prim: 0.0,
        r_dual: 0.0,
        objective: 0.0,
        setup_seconds: 0.0,
        solve_seconds: 0.0,
        wall_time_seconds: 0.0,
        per_iteration_seconds: 0.0,
        rho: cfg.rho,
        sigma: cfg.sigma,
        alpha: cfg.alpha,
        tol: cfg.eps_abs,
    };
    if !feasibility_check(&pattern_of(spec.matrix())).feasible {
        row.wall_time_seconds = start.elapsed().as_secs_f64();
        return Ok(row);
    }
    let rp = match cfg.formulation {
        Formulation::Sparse => build_reduced_problem(&spec)?,
        Formulation::FullTriangle => build_full_reduced_problem(&spec)?,
    };
    let mut solver = AdmmSolver::new(rp, *cfg)?;
    let t = Instant::now();
    let outcome = solver.run()?;
    let solve_seconds = t.elapsed().as_secs_f64();
    row.backend = solver.kkt().kind().as_str();
    row.status = outcome.status.as_str();
    row.iterations = outcome.iterations;
    row.r_prim = outcome.residuals.r_prim;
    row.r_dual = outcome.residuals.r_dual;
    row.objective = solver.problem().objective(&solver.state().x);
    row.setup_seconds = solver.setup_seconds();
    row.solve_seconds = solve_seconds;
    row.per_iteration_seconds = solve_seconds / outcome.iterations.max(1) as f64;
    row.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(row)
}

pub fn run(args: &BenchArgs) -> Result<u8> {
    let target = TargetArg::parse(&args.target);
    if matches!(target, TargetArg::File(_)) {
        bail!("bench accepts only one, mean-sum or max-entry as target");
    }
    let mut cfg = args.solver.config(false, 25);
    if let Some(k) = args.fixed_iters {
        cfg.max_iters = k;
        cfg.eps_abs = 0.0;
        cfg.check_interval = k.max(1);
    }
    cfg.validate()?;

    let mut rows = Vec::new();
    match (&args.dir, args.synthetic) {
        (Some(dir), None) => {
            let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
                .with_context(|| format!("cannot list {}", dir.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "mtx"))
                .collect();
            files.sort();
            for path in files {
                let c = match read_symmetric(&path, &args.read.options()) {
                    Ok(c) => c,
                    Err(e) => {
                        eprintln!("dsproj: skipping {}: {e:#}", path.display());
                        continue;
                    }
                };
                rows.push(bench_one(path.display().to_string(), c, &target, &cfg)?);
            }
        }
        (None, Some(Synthetic::Banded)) => {
            for &n in &args.sizes {
                let c = banded(n, args.bandwidth, args.seed);
                let name = format!("banded:n={n}:b={}:seed={}", args.bandwidth, args.seed);
                rows.push(bench_one(name, c, &target, &cfg)?);
            }
        }
        _ => bail!("give either a directory or --synthetic banded --sizes <list>"),
    }

    match &args.out {
        Some(path) => write_csv_file(path, &HEADER, &rows)?,
        None => write_csv(BufWriter::new(io::stdout().lock()), &HEADER, &rows)?,
    }
    Ok(EXIT_OK)
}
