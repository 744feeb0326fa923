//! Sparse symmetric storage, pattern extraction and Matrix Market I/O.
//!
//! A [`SymmetricSparseMatrix`] keeps only the upper triangle (`row <= col`) in
//! compressed sparse column form. Indices are 0-based in memory and 1-based in
//! Matrix Market files.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// What to do with negative input values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NegativePolicy {
    #[default]
    Reject,
    AbsoluteValue,
}

/// What to do when the same position appears more than once.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DuplicatePolicy {
    #[default]
    Reject,
    Sum,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ValidationOptions {
    /// Largest accepted `|a_ij - a_ji|` for `general` inputs.
    pub symmetry_tolerance: f64,
    pub negative_policy: NegativePolicy,
    pub duplicate_policy: DuplicatePolicy,
}

impl ValidationOptions {
    fn check(&self) -> Result<()> {
        if !(self.symmetry_tolerance >= 0.0) {
            return Err(Error::Domain(format!(
                "symmetry tolerance must be nonnegative, got {}",
                self.symmetry_tolerance
            )));
        }
        Ok(())
    }
}

/// Symmetric `n x n` matrix with nonnegative entries, upper triangle only.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricSparseMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

/// One raw coordinate entry, 0-based, with the source line it came from.
#[derive(Clone, Copy, Debug)]
struct RawEntry {
    row: usize,
    col: usize,
    value: f64,
    line: usize,
}

impl SymmetricSparseMatrix {
    /// The `n x n` matrix with no stored entries.
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            col_ptr: vec![0; n + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a matrix from 0-based triplets. An entry `(i, j)` stands for both
    /// `(i, j)` and `(j, i)`, so either triangle may be given.
    pub fn from_triplets<I>(n: usize, triplets: I, opts: &ValidationOptions) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        opts.check()?;
        let mut raw = Vec::new();
        for (k, (row, col, value)) in triplets.into_iter().enumerate() {
            if row >= n || col >= n {
                return Err(Error::Domain(format!(
                    "entry ({}, {}) outside a {n} x {n} matrix",
                    row + 1,
                    col + 1
                )));
            }
            raw.push(RawEntry {
                row: row.min(col),
                col: row.max(col),
                value,
                line: k + 1,
            });
        }
        Self::from_upper_raw(n, raw, opts)
    }

    /// Builds a matrix from a row-major dense array, which must be exactly
    /// symmetric. Zeros are left out of the pattern.
    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: dense.len(),
            });
        }
        let mut triplets = Vec::new();
        for col in 0..n {
            for row in 0..=col {
                let upper = dense[row * n + col];
                let lower = dense[col * n + row];
                if upper != lower {
                    return Err(Error::Symmetry {
                        row: row + 1,
                        col: col + 1,
                        upper,
                        lower,
                    });
                }
                if upper != 0.0 {
                    triplets.push((row, col, upper));
                }
            }
        }
        Self::from_triplets(n, triplets, &ValidationOptions::default())
    }

    /// Assembles from upper-triangle entries: validates values, resolves
    /// duplicates and sorts column-major. Explicit zeros stay in the pattern.
    fn from_upper_raw(n: usize, mut raw: Vec<RawEntry>, opts: &ValidationOptions) -> Result<Self> {
        for e in &mut raw {
            e.value = checked_value(e.value, e.line, opts)?;
        }
        raw.sort_by_key(|e| (e.col, e.row, e.line));

        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(raw.len());
        let mut values = Vec::with_capacity(raw.len());
        let mut iter = raw.into_iter().peekable();
        while let Some(first) = iter.next() {
            let mut value = first.value;
            while let Some(next) = iter.next_if(|e| e.row == first.row && e.col == first.col) {
                match opts.duplicate_policy {
                    DuplicatePolicy::Sum => value += next.value,
                    DuplicatePolicy::Reject => {
                        return Err(Error::Parse {
                            line: next.line,
                            message: format!(
                                "duplicate entry ({}, {}) (first seen on line {})",
                                first.row + 1,
                                first.col + 1,
                                first.line
                            ),
                        })
                    }
                }
            }
            col_ptr[first.col + 1] += 1;
            row_idx.push(first.row);
            values.push(value);
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        Ok(Self {
            n,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Builds from a `general` coordinate listing: both triangles must agree
    /// within the tolerance, and the upper triangle is kept.
    fn from_general_raw(n: usize, raw: Vec<RawEntry>, opts: &ValidationOptions) -> Result<Self> {
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        for e in raw {
            if e.row <= e.col {
                upper.push(e);
            } else {
                lower.push(RawEntry {
                    row: e.col,
                    col: e.row,
                    ..e
                });
            }
        }
        let upper = Self::from_upper_raw(n, upper, opts)?;
        let lower = Self::from_upper_raw(n, lower, opts)?;
        // diagonal entries only ever land in `upper`
        let mut a = upper.iter().peekable();
        let mut b = lower.iter().peekable();
        loop {
            let (row, col, u, l) = match (a.peek().copied(), b.peek().copied()) {
                (None, None) => break,
                (Some(x), None) => {
                    a.next();
                    (x.0, x.1, x.2, 0.0)
                }
                (None, Some(y)) => {
                    b.next();
                    (y.0, y.1, 0.0, y.2)
                }
                (Some(x), Some(y)) => match (x.1, x.0).cmp(&(y.1, y.0)) {
                    std::cmp::Ordering::Less => {
                        a.next();
                        (x.0, x.1, x.2, 0.0)
                    }
                    std::cmp::Ordering::Greater => {
                        b.next();
                        (y.0, y.1, 0.0, y.2)
                    }
                    std::cmp::Ordering::Equal => {
                        a.next();
                        b.next();
                        (x.0, x.1, x.2, y.2)
                    }
                },
            };
            if row != col && !((u - l).abs() <= opts.symmetry_tolerance) {
                return Err(Error::Symmetry {
                    row: row + 1,
                    col: col + 1,
                    upper: u,
                    lower: l,
                });
            }
        }
        drop((a, b));
        Ok(upper)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored (upper-triangle) entries.
    pub fn nnz_upper(&self) -> usize {
        self.values.len()
    }

    /// Number of nonzeros of the full symmetric matrix.
    pub fn nnz(&self) -> usize {
        2 * self.nnz_upper() - self.diagonal_count()
    }

    pub fn diagonal_count(&self) -> usize {
        self.iter().filter(|&(i, j, _)| i == j).count()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored entries `(row, col, value)` with `row <= col`, column-major.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |j| {
            (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |k| (self.row_idx[k], j, self.values[k]))
        })
    }

    /// Value at `(i, j)` of the full matrix.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (row, col) = (i.min(j), i.max(j));
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        match self.row_idx[range.clone()].binary_search(&row) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Row-major dense copy of the full matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut dense = vec![0.0; n * n];
        for (i, j, v) in self.iter() {
            dense[i * n + j] = v;
            dense[j * n + i] = v;
        }
        dense
    }

    /// Row sums of the full matrix (equal to the column sums).
    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n];
        for (i, j, v) in self.iter() {
            sums[i] += v;
            if i != j {
                sums[j] += v;
            }
        }
        sums
    }

    /// Sum of all entries of the full matrix.
    pub fn total_sum(&self) -> f64 {
        self.iter()
            .map(|(i, j, v)| if i == j { v } else { 2.0 * v })
            .sum()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// `diag(d) * self * diag(d)`, same pattern.
    pub fn symmetric_scaled(&self, d: &[f64]) -> Self {
        let mut out = self.clone();
        for j in 0..self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                out.values[k] *= d[self.row_idx[k]] * d[j];
            }
        }
        out
    }

    /// `y = self * x` for the full symmetric matrix.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, j, v) in self.iter() {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
        y
    }
}

fn checked_value(value: f64, line: usize, opts: &ValidationOptions) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::Domain(format!("non-finite value {value} (entry {line})")));
    }
    if value < 0.0 {
        return match opts.negative_policy {
            NegativePolicy::AbsoluteValue => Ok(-value),
            NegativePolicy::Reject => Err(Error::Domain(format!(
                "negative value {value} (entry {line})"
            ))),
        };
    }
    Ok(value)
}

/// Sparsity pattern of a symmetric matrix: the stored upper triangle plus the
/// row adjacency of the full pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    n: usize,
    upper: Vec<(usize, usize)>,
    row_counts: Vec<usize>,
    adj_ptr: Vec<usize>,
    adj_idx: Vec<usize>,
}

impl Pattern {
    /// Pattern from upper-triangle positions `(row, col)`, `row <= col`,
    /// sorted column-major without duplicates.
    pub fn from_upper(n: usize, upper: Vec<(usize, usize)>) -> Self {
        debug_assert!(upper.iter().all(|&(i, j)| i <= j && j < n));
        debug_assert!(upper.windows(2).all(|w| (w[0].1, w[0].0) < (w[1].1, w[1].0)));
        let mut row_counts = vec![0usize; n];
        for &(i, j) in &upper {
            row_counts[i] += 1;
            if i != j {
                row_counts[j] += 1;
            }
        }
        let mut adj_ptr = vec![0usize; n + 1];
        for i in 0..n {
            adj_ptr[i + 1] = adj_ptr[i] + row_counts[i];
        }
        let mut next = adj_ptr.clone();
        let mut adj_idx = vec![0usize; adj_ptr[n]];
        for &(i, j) in &upper {
            adj_idx[next[i]] = j;
            next[i] += 1;
            if i != j {
                adj_idx[next[j]] = i;
                next[j] += 1;
            }
        }
        for i in 0..n {
            adj_idx[adj_ptr[i]..adj_ptr[i + 1]].sort_unstable();
        }
        Self {
            n,
            upper,
            row_counts,
            adj_ptr,
            adj_idx,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored upper-triangle positions, column-major.
    pub fn upper_entries(&self) -> &[(usize, usize)] {
        &self.upper
    }

    /// Per-row nonzero counts of the full symmetric pattern.
    pub fn row_counts(&self) -> &[usize] {
        &self.row_counts
    }

    /// Per-column counts; identical to the row counts by symmetry.
    pub fn col_counts(&self) -> &[usize] {
        &self.row_counts
    }

    /// Columns holding a nonzero in row `i`, ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj_idx[self.adj_ptr[i]..self.adj_ptr[i + 1]]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    pub fn nnz(&self) -> usize {
        self.adj_idx.len()
    }

    pub fn nnz_upper(&self) -> usize {
        self.upper.len()
    }

    pub fn diagonal_count(&self) -> usize {
        self.upper.iter().filter(|&&(i, j)| i == j).count()
    }

    /// True when every position of the `n x n` matrix is present.
    pub fn is_dense(&self) -> bool {
        self.nnz_upper() == self.n * (self.n + 1) / 2
    }
}

pub fn pattern_of(m: &SymmetricSparseMatrix) -> Pattern {
    Pattern::from_upper(m.n(), m.iter().map(|(i, j, _)| (i, j)).collect())
}

/// Symmetry flag of a Matrix Market header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixSymmetry {
    General,
    Symmetric,
}

/// A rectangular sparse matrix as listed in a coordinate file, 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct CooMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl CooMatrix {
    /// Row-major dense copy; duplicate positions are summed.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.nrows * self.ncols];
        for &(i, j, v) in &self.entries {
            dense[i * self.ncols + j] += v;
        }
        dense
    }
}

/// Parsed coordinate file before any symmetric interpretation.
#[derive(Clone, Debug)]
pub struct CoordinateFile {
    pub symmetry: MatrixSymmetry,
    pub nrows: usize,
    pub ncols: usize,
    entries: Vec<RawEntry>,
}

impl CoordinateFile {
    /// Entries as listed, 0-based. `symmetric` files list one triangle only.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|e| (e.row, e.col, e.value))
    }

    /// The matrix as a general rectangular listing, expanding a `symmetric`
    /// header into both triangles and applying the value policies.
    pub fn into_coo(self, opts: &ValidationOptions) -> Result<CooMatrix> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let v = checked_value(e.value, e.line, opts)?;
            entries.push((e.row, e.col, v));
            if self.symmetry == MatrixSymmetry::Symmetric && e.row != e.col {
                entries.push((e.col, e.row, v));
            }
        }
        if opts.duplicate_policy == DuplicatePolicy::Reject {
            let mut keys: Vec<(usize, usize)> = entries.iter().map(|&(i, j, _)| (i, j)).collect();
            keys.sort_unstable();
            if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::Domain(format!(
                    "duplicate entry ({}, {})",
                    w[0].0 + 1,
                    w[0].1 + 1
                )));
            }
        }
        Ok(CooMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            entries,
        })
    }

    /// Interprets the file as a symmetric matrix.
    pub fn into_symmetric(self, opts: &ValidationOptions) -> Result<SymmetricSparseMatrix> {
        opts.check()?;
        if self.nrows != self.ncols {
            return Err(Error::Domain(format!(
                "expected a square matrix, got {} x {}",
                self.nrows, self.ncols
            )));
        }
        match self.symmetry {
            MatrixSymmetry::Symmetric => {
                let raw = self
                    .entries
                    .into_iter()
                    .map(|e| RawEntry {
                        row: e.row.min(e.col),
                        col: e.row.max(e.col),
                        ..e
                    })
                    .collect();
                SymmetricSparseMatrix::from_upper_raw(self.nrows, raw, opts)
            }
            MatrixSymmetry::General => {
                SymmetricSparseMatrix::from_general_raw(self.nrows, self.entries, opts)
            }
        }
    }
}

/// Reads a real (or integer) coordinate Matrix Market stream.
pub fn read_coordinate<R: BufRead>(reader: R) -> Result<CoordinateFile> {
    let mut lines = reader.lines().enumerate().map(|(k, l)| (k + 1, l));
    let parse_err = |line: usize, message: String| Error::Parse { line, message };

    let (line_no, header) = match lines.next() {
        Some((k, line)) => (k, line?),
        None => return Err(parse_err(1, "empty input".into())),
    };
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(line_no, format!("bad header {header:?}")));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(line_no, format!("unsupported format {:?}", tokens[2])));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(parse_err(line_no, format!("unsupported field {:?}", tokens[3])));
    }
    let symmetry = match tokens[4].as_str() {
        "general" => MatrixSymmetry::General,
        "symmetric" => MatrixSymmetry::Symmetric,
        other => return Err(parse_err(line_no, format!("unsupported symmetry {other:?}"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    let mut last_line = line_no;
    for (k, line) in lines {
        let line = line?;
        last_line = k;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(k, format!("expected `rows cols nnz`, got {trimmed:?}")));
                }
                let mut dims = [0usize; 3];
                for (d, f) in dims.iter_mut().zip(&fields) {
                    *d = f
                        .parse()
                        .map_err(|_| parse_err(k, format!("bad size field {f:?}")))?;
                }
                size = Some((dims[0], dims[1], dims[2]));
                entries.reserve(dims[2]);
            }
            Some((nrows, ncols, nnz)) => {
                if fields.len() != 3 {
                    return Err(parse_err(k, format!("expected `row col value`, got {trimmed:?}")));
                }
                if entries.len() == nnz {
                    return Err(parse_err(k, format!("more than {nnz} entries")));
                }
                let index = |f: &str, bound: usize| -> Result<usize> {
                    match f.parse::<usize>() {
                        Ok(v) if v >= 1 && v <= bound => Ok(v - 1),
                        _ => Err(parse_err(k, format!("bad index {f:?} (bound {bound})"))),
                    }
                };
                let row = index(fields[0], nrows)?;
                let col = index(fields[1], ncols)?;
                let value: f64 = fields[2]
                    .parse()
                    .map_err(|_| parse_err(k, format!("bad value {:?}", fields[2])))?;
                entries.push(RawEntry {
                    row,
                    col,
                    value,
                    line: k,
                });
            }
        }
    }
    let (nrows, ncols, nnz) = size.ok_or_else(|| parse_err(last_line, "missing size line".into()))?;
    if entries.len() != nnz {
        return Err(parse_err(
            last_line,
            format!("expected {nnz} entries, found {}", entries.len()),
        ));
    }
    Ok(CoordinateFile {
        symmetry,
        nrows,
        ncols,
        entries,
    })
}

/// Reads a symmetric matrix from a `symmetric` or `general` coordinate stream.
pub fn read_matrix_market<R: BufRead>(
    reader: R,
    opts: &ValidationOptions,
) -> Result<SymmetricSparseMatrix> {
    read_coordinate(reader)?.into_symmetric(opts)
}

pub fn parse_matrix_market(text: &str, opts: &ValidationOptions) -> Result<SymmetricSparseMatrix> {
    read_matrix_market(text.as_bytes(), opts)
}

/// Writes `m` as a `symmetric` coordinate file (lower triangle listed, as the
/// format prescribes) with 17 significant digits per value.
pub fn write_matrix_market<W: Write>(m: &SymmetricSparseMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(out, "{} {} {}", m.n(), m.n(), m.nnz_upper())?;
    let mut buf = String::new();
    for (i, j, v) in m.iter() {
        buf.clear();
        let _ = writeln!(buf, "{} {} {:.16e}", j + 1, i + 1, v);
        out.write_all(buf.as_bytes())?;
    }
    Ok(())
}

/// Writes a rectangular matrix as a `general` coordinate file.
pub fn write_coo<W: Write>(m: &CooMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", m.nrows, m.ncols, m.entries.len())?;
    for &(i, j, v) in &m.entries {
        writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn matrix_market_string(m: &SymmetricSparseMatrix) -> String {
    let mut buf = Vec::new();
    write_matrix_market(m, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("output is ASCII")
}
