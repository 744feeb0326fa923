//! Machine-readable run records: JSON-lines summaries and CSV traces.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Solver settings echoed into every summary.
#[derive(Clone, Debug, Serialize)]
pub struct ConfigEcho {
    pub rho: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub check_interval: usize,
    pub backend: String,
    pub target: String,
    pub weighted: bool,
    pub nonsymmetric: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub input_path: String,
    /// Order of the symmetric matrix that was solved.
    pub n: usize,
    /// Stored entries of that matrix, both triangles.
    pub nnz: usize,
    pub method: String,
    pub status: String,
    pub iterations: usize,
    pub r_prim: f64,
    /// Only ADMM has a dual residual.
    pub r_dual: Option<f64>,
    pub objective: f64,
    pub wall_time_seconds: f64,
    pub config: ConfigEcho,
}

impl RunSummary {
    /// Non-finite values have no JSON representation; they are reported as
    /// the largest finite double so the record stays parseable.
    pub fn sanitized(mut self) -> Self {
        let fix = |v: f64| if v.is_finite() { v } else { f64::MAX };
        self.r_prim = fix(self.r_prim);
        self.r_dual = self.r_dual.map(fix);
        self.objective = fix(self.objective);
        self.wall_time_seconds = fix(self.wall_time_seconds);
        self
    }
}

/// One JSON object per line.
pub fn write_summaries(path: &Path, rows: &[RunSummary]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
    for row in rows {
        serde_json::to_writer(&mut out, &row.clone().sanitized())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `header` and then the serialized rows, so an empty run still
/// produces a header line.
pub fn write_csv<T: Serialize>(out: impl Write, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_csv(BufWriter::new(file), header, rows)
}
