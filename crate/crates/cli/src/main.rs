//! `dsproj`: nearest doubly stochastic matrices from the command line.
//!
//! Exit codes: 0 solved (or feasible), 1 usage, input or I/O error,
//! 2 iteration limit reached, 3 infeasible sparsity pattern.

mod bench;
mod check;
mod compare;
mod input;
mod normalize;
mod summary;

use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use dsproj_core::{BackendKind, Formulation, LinearBackend, SolverConfig, Status};

use crate::input::ReadOptions;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_MAX_ITERS: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;

pub fn exit_code(status: Status) -> u8 {
    match status {
        Status::Solved => EXIT_OK,
        Status::MaxIters => EXIT_MAX_ITERS,
        Status::InfeasibleInput => EXIT_INFEASIBLE,
    }
}

#[derive(Parser, Debug)]
#[command(name = "dsproj", version, about = "Nearest doubly stochastic matrix on a sparsity pattern")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Project a matrix onto the doubly stochastic matrices with its pattern.
    Normalize(normalize::NormalizeArgs),
    /// Decide whether the pattern supports a doubly stochastic matrix.
    Check(check::CheckArgs),
    /// Run several methods on one matrix and compare their results.
    Compare(compare::CompareArgs),
    /// Time the ADMM solver on synthetic or on-disk instances.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Auto,
    Cholesky,
    Cg,
    /// Closed-form inverse of the full upper-triangle problem (unweighted only).
    Dense,
}

#[derive(Args, Clone, Debug)]
pub struct ReadArgs {
    /// Replace negative entries by their absolute value instead of failing.
    #[arg(long)]
    pub abs_negatives: bool,
    /// Sum repeated positions instead of failing.
    #[arg(long)]
    pub sum_duplicates: bool,
    /// Largest accepted |a_ij - a_ji| for general (unsymmetric) input files.
    #[arg(long, default_value_t = 0.0)]
    pub symmetry_tol: f64,
}

impl ReadArgs {
    pub fn options(&self) -> ReadOptions {
        ReadOptions {
            abs_negatives: self.abs_negatives,
            sum_duplicates: self.sum_duplicates,
            symmetry_tol: self.symmetry_tol,
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct SolverArgs {
    /// Absolute tolerance on the primal and dual residuals (max norm).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Over-relaxation parameter in (0, 2).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum, default_value_t = Backend::Auto)]
    pub backend: Backend,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Iterations between residual evaluations.
    #[arg(long)]
    pub check_interval: Option<usize>,
    /// Start from a feasible point built from the pattern's perfect matching.
    #[arg(long)]
    pub warm_start: bool,
}

impl SolverArgs {
    pub fn config(&self, record_trace: bool, default_check_interval: usize) -> SolverConfig {
        let d = SolverConfig::default();
        let (kind, formulation) = match self.backend {
            Backend::Auto => (BackendKind::Auto, Formulation::Sparse),
            Backend::Cholesky => (BackendKind::Cholesky, Formulation::Sparse),
            Backend::Cg => (BackendKind::ConjugateGradient, Formulation::Sparse),
            Backend::Dense => (BackendKind::ShermanMorrison, Formulation::FullTriangle),
        };
        SolverConfig {
            rho: self.rho.unwrap_or(d.rho),
            sigma: self.sigma.unwrap_or(d.sigma),
            alpha: self.alpha.unwrap_or(d.alpha),
            eps_abs: self.tol.unwrap_or(d.eps_abs),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            check_interval: self.check_interval.unwrap_or(default_check_interval),
            backend: LinearBackend::with_kind(kind),
            formulation,
            record_trace,
            warm_start: self.warm_start,
            ..d
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Normalize(args) => normalize::run(&args),
        Command::Check(args) => check::run(&args),
        Command::Compare(args) => compare::run(&args),
        Command::Bench(args) => bench::run(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("dsproj: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
