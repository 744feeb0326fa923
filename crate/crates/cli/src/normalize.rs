use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use dsproj_core::{extract_embedded_block, solve, write_coo, write_matrix_market, ProblemSpec, Status};
use serde::Serialize;

use crate::input::{load, load_weights, TargetArg};
use crate::summary::{write_csv_file, write_summaries, ConfigEcho, RunSummary};
use crate::{exit_code, ReadArgs, SolverArgs};

#[derive(Args, Debug)]
pub struct NormalizeArgs {
    /// Matrix Market coordinate file.
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Row-sum target: one, mean-sum, max-entry, or a file with one value per row.
    #[arg(long, default_value = "one")]
    pub target: String,
    /// Positive weights on the input pattern (Matrix Market).
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Treat the input as a rectangular matrix and balance its rows and
    /// columns through the symmetric embedding.
    #[arg(long)]
    pub nonsymmetric: bool,
    /// CSV of (iter, r_prim, r_dual, objective) at every residual check.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// JSON-lines run summary.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub read: ReadArgs,
}

#[derive(Serialize)]
struct TraceCsvRow {
    iter: usize,
    r_prim: f64,
    r_dual: f64,
    objective: f64,
}

/// 1-based label of a vertex of the embedding.
pub fn describe_index(i: usize, block: Option<(usize, usize)>) -> String {
    match block {
        Some((nrows, _)) if i >= nrows => format!("col {}", i - nrows + 1),
        Some(_) => format!("row {}", i + 1),
        None => (i + 1).to_string(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

pub fn run(args: &NormalizeArgs) -> Result<u8> {
    let read = args.read.options();
    let loaded = load(&args.input, &read, args.nonsymmetric)?;
    let target_arg = TargetArg::parse(&args.target);
    let target = target_arg.resolve(&loaded)?;
    let mut spec = ProblemSpec::new(loaded.matrix.clone()).with_target(target)?;
    if let Some(path) = &args.weights {
        spec = spec.with_weights(load_weights(path, &read, args.nonsymmetric)?)?;
    }
    let cfg = args.solver.config(args.trace.is_some(), 25);

    let start = Instant::now();
    let sol = solve(&spec, &cfg)?;
    let wall = start.elapsed().as_secs_f64();

    match sol.status {
        Status::InfeasibleInput => {
            let set = sol.certificate.deficient_set.as_deref().unwrap_or(&[]);
            let labels: Vec<String> = set.iter().map(|&i| describe_index(i, loaded.block)).collect();
            eprintln!(
                "dsproj: the pattern supports no doubly stochastic matrix; deficient rows: {}",
                labels.join(" ")
            );
        }
        Status::MaxIters => eprintln!(
            "dsproj: iteration limit reached after {} iterations (r_prim {:.3e}, r_dual {:.3e})",
            sol.iterations, sol.residuals.r_prim, sol.residuals.r_dual
        ),
        Status::Solved => {}
    }

    if sol.status != Status::InfeasibleInput {
        let mut out = create(&args.out)?;
        match loaded.block {
            Some((nrows, ncols)) => write_coo(&extract_embedded_block(&sol.x, nrows, ncols), &mut out)?,
            None => write_matrix_market(&sol.x, &mut out)?,
        }
        out.flush()?;
    }

    if let Some(path) = &args.trace {
        let rows: Vec<TraceCsvRow> = sol
            .trace
            .iter()
            .map(|t| TraceCsvRow {
                iter: t.iter,
                r_prim: t.r_prim,
                r_dual: t.r_dual,
                objective: t.objective,
            })
            .collect();
        write_csv_file(path, &["iter", "r_prim", "r_dual", "objective"], &rows)?;
    }

    if let Some(path) = &args.summary {
        let backend = sol.stats.map_or(cfg.backend.kind, |s| s.backend);
        let summary = RunSummary {
            input_path: args.input.display().to_string(),
            n: loaded.matrix.n(),
            nnz: loaded.matrix.nnz(),
            method: "admm".into(),
            status: sol.status.as_str().into(),
            iterations: sol.iterations,
            r_prim: sol.residuals.r_prim,
            r_dual: Some(sol.residuals.r_dual),
            objective: sol.objective,
            wall_time_seconds: wall,
            config: ConfigEcho {
                rho: cfg.rho,
                sigma: cfg.sigma,
                alpha: cfg.alpha,
                tol: cfg.eps_abs,
                max_iters: cfg.max_iters,
                check_interval: cfg.check_interval,
                backend: backend.as_str().into(),
                target: target_arg.label(),
                weighted: args.weights.is_some(),
                nonsymmetric: args.nonsymmetric,
            },
        };
        write_summaries(path, &[summary])?;
    }

    Ok(exit_code(sol.status))
}
