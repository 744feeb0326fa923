//! Loading matrices, weights and row-sum targets from disk.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::{bail, Context, Result};
use dsproj_core::{
    embed_nonsymmetric, read_coordinate, CooMatrix, DuplicatePolicy, NegativePolicy, SymmetricSparseMatrix,
    ValidationOptions,
};

#[derive(Clone, Copy, Debug, Default)]
pub struct ReadOptions {
    pub abs_negatives: bool,
    pub sum_duplicates: bool,
    pub symmetry_tol: f64,
}

impl ReadOptions {
    pub fn validation(&self) -> ValidationOptions {
        ValidationOptions {
            symmetry_tolerance: self.symmetry_tol,
            negative_policy: if self.abs_negatives {
                NegativePolicy::AbsoluteValue
            } else {
                NegativePolicy::Reject
            },
            duplicate_policy: if self.sum_duplicates {
                DuplicatePolicy::Sum
            } else {
                DuplicatePolicy::Reject
            },
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

pub fn read_symmetric(path: &Path, opts: &ReadOptions) -> Result<SymmetricSparseMatrix> {
    read_coordinate(open(path)?)
        .and_then(|f| f.into_symmetric(&opts.validation()))
        .with_context(|| format!("cannot read {}", path.display()))
}

pub fn read_rectangular(path: &Path, opts: &ReadOptions) -> Result<CooMatrix> {
    read_coordinate(open(path)?)
        .and_then(|f| f.into_coo(&opts.validation()))
        .with_context(|| format!("cannot read {}", path.display()))
}

/// A matrix as handed to the solver, plus what is needed to write it back.
pub struct Loaded {
    pub matrix: SymmetricSparseMatrix,
    /// `(nrows, ncols)` of the original block when the input was embedded.
    pub block: Option<(usize, usize)>,
    /// Entries of the input as given, for computing targets.
    pub total: f64,
    pub max_entry: f64,
    /// Rows of the input (not of the embedding).
    pub nrows: usize,
}

pub fn load(path: &Path, opts: &ReadOptions, nonsymmetric: bool) -> Result<Loaded> {
    if nonsymmetric {
        let coo = read_rectangular(path, opts)?;
        let total = coo.entries.iter().map(|e| e.2).sum();
        let max_entry = coo.entries.iter().fold(0.0f64, |a, e| a.max(e.2));
        let matrix = embed_nonsymmetric(&coo)?;
        Ok(Loaded {
            matrix,
            block: Some((coo.nrows, coo.ncols)),
            total,
            max_entry,
            nrows: coo.nrows,
        })
    } else {
        let matrix = read_symmetric(path, opts)?;
        Ok(Loaded {
            total: matrix.total_sum(),
            max_entry: matrix.max_value(),
            nrows: matrix.n(),
            block: None,
            matrix,
        })
    }
}

/// Weights for the same positions as the input, embedded the same way.
pub fn load_weights(path: &Path, opts: &ReadOptions, nonsymmetric: bool) -> Result<SymmetricSparseMatrix> {
    // weights are never negative by intent; reject rather than fold
    let opts = ReadOptions {
        abs_negatives: false,
        ..*opts
    };
    if nonsymmetric {
        Ok(embed_nonsymmetric(&read_rectangular(path, &opts)?)?)
    } else {
        read_symmetric(path, &opts)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetArg {
    One,
    MeanSum,
    MaxEntry,
    File(String),
}

impl TargetArg {
    pub fn parse(s: &str) -> Self {
        match s {
            "one" => TargetArg::One,
            "mean-sum" => TargetArg::MeanSum,
            "max-entry" => TargetArg::MaxEntry,
            other => TargetArg::File(other.to_string()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            TargetArg::One => "one".into(),
            TargetArg::MeanSum => "mean-sum".into(),
            TargetArg::MaxEntry => "max-entry".into(),
            TargetArg::File(p) => format!("file:{p}"),
        }
    }

    /// Row-sum target for every row of the (possibly embedded) matrix.
    pub fn resolve(&self, loaded: &Loaded) -> Result<Vec<f64>> {
        let n = loaded.matrix.n();
        let tau = match self {
            TargetArg::One => 1.0,
            TargetArg::MeanSum => {
                if loaded.nrows == 0 {
                    bail!("mean-sum target of an empty matrix");
                }
                loaded.total / loaded.nrows as f64
            }
            TargetArg::MaxEntry => loaded.max_entry,
            TargetArg::File(path) => {
                let values = read_target_file(Path::new(path))?;
                if values.len() != n {
                    bail!("target file {path} has {} values, expected {n}", values.len());
                }
                return Ok(values);
            }
        };
        if !(tau > 0.0 && tau.is_finite()) {
            bail!("target {} evaluates to {tau}, which is not positive", self.label());
        }
        Ok(vec![tau; n])
    }
}

/// One value per line; blank lines and lines starting with `%` or `#` are skipped.
pub fn read_target_file(path: &Path) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (k, line) in open(path)?.lines().enumerate() {
        let line = line.with_context(|| format!("cannot read {}", path.display()))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        let v: f64 = t
            .parse()
            .with_context(|| format!("{}:{}: not a number: {t}", path.display(), k + 1))?;
        values.push(v);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_keywords() {
        assert_eq!(TargetArg::parse("one"), TargetArg::One);
        assert_eq!(TargetArg::parse("mean-sum"), TargetArg::MeanSum);
        assert_eq!(TargetArg::parse("max-entry"), TargetArg::MaxEntry);
        assert_eq!(TargetArg::parse("t.txt"), TargetArg::File("t.txt".into()));
    }

    #[test]
    fn mean_sum_uses_full_matrix() {
        let m = SymmetricSparseMatrix::from_dense(2, &[1.0, 2.0, 2.0, 3.0]).unwrap();
        let loaded = Loaded {
            total: m.total_sum(),
            max_entry: m.max_value(),
            nrows: 2,
            block: None,
            matrix: m,
        };
        assert_eq!(TargetArg::MeanSum.resolve(&loaded).unwrap(), vec![4.0, 4.0]);
        assert_eq!(TargetArg::MaxEntry.resolve(&loaded).unwrap(), vec![3.0, 3.0]);
    }
}
