//! Loading, validating, centering and standardizing rectangular numeric data.
//!
//! All second-order sample moments use weight `1/n` (maximum-likelihood
//! moments). The matrix square root is the symmetric spectral root.

use std::collections::HashSet;
use std::fs::File;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, SkewError};

/// Smallest admissible eigenvalue of a covariance, relative to the largest.
pub const SINGULARITY_EPS: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;

/// An `n x d` matrix of finite observations with unique column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    names: Vec<String>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        let (n, d) = values.shape();
        if n < 2 {
            return Err(SkewError::InvalidData(format!("need at least 2 rows, got {n}")));
        }
        if d < 1 {
            return Err(SkewError::InvalidData("need at least 1 column".into()));
        }
        if names.len() != d {
            return Err(SkewError::mismatch(format!("{d} column labels"), names.len()));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(SkewError::DuplicateLabel(name.clone()));
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            // column-major storage
            return Err(SkewError::InvalidData(format!(
                "non-finite value at row {}, column {}",
                pos % n + 1,
                pos / n + 1
            )));
        }
        Ok(DataMatrix { values, names })
    }

    /// Builds a matrix with default labels `X1..Xd`.
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        let names = default_names(values.ncols());
        Self::new(values, names)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(SkewError::InvalidData(format!("row {} has {} values, expected {d}", bad + 1, rows[bad].len())));
        }
        Self::from_matrix(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    /// Rows at the given 0-based indices, repeats allowed.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n()) {
            return Err(SkewError::precondition(format!("row index {bad} out of range (n = {})", self.n())));
        }
        let values = DMatrix::from_fn(rows.len(), self.d(), |i, j| self.values[(rows[i], j)]);
        Self::new(values, self.names.clone())
    }

    /// Columns at the given 0-based indices, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if cols.is_empty() {
            return Err(SkewError::EmptySelection("no columns selected".into()));
        }
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.d()) {
            return Err(SkewError::precondition(format!("column index {bad} out of range (d = {})", self.d())));
        }
        let values = self.values.select_columns(cols);
        let names = cols.iter().map(|&c| self.names[c].clone()).collect();
        Self::new(values, names)
    }

    /// Returns `self * A^T + b`, one transformed row per observation.
    pub fn affine(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        if a.ncols() != self.d() || b.len() != a.nrows() {
            return Err(SkewError::mismatch(
                format!("A with {} columns and b of matching rows", self.d()),
                format!("A {}x{}, b {}", a.nrows(), a.ncols(), b.len()),
            ));
        }
        let mut out = &self.values * a.transpose();
        for mut row in out.row_iter_mut() {
            row += b.transpose();
        }
        Self::from_matrix(out)
    }
}

pub(crate) fn default_names(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("X{j}")).collect()
}

/// A symmetric positive-definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    values: DMatrix<f64>,
}

impl SpdMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if !values.is_square() {
            return Err(SkewError::mismatch("square matrix", format!("{}x{}", values.nrows(), values.ncols())));
        }
        let scale = values.amax().max(f64::MIN_POSITIVE);
        let asym = (&values - values.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(SkewError::InvalidData(format!("matrix is not symmetric (max asymmetry {asym:e})")));
        }
        check_definite(&values)?;
        Ok(SpdMatrix { values })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }
}

fn check_definite(values: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let eig = SymmetricEigen::new(values.clone());
    let (imin, &lmin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty matrix");
    let lmax = eig.eigenvalues.max();
    if !(lmax > 0.0) || lmin <= SINGULARITY_EPS * lmax {
        return Err(SkewError::Singular {
            eigenvalue: lmin,
            direction: eig.eigenvectors.column(imin).iter().copied().collect(),
        });
    }
    Ok(eig)
}

/// Where the CSV reader should look and what it should keep.
#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    /// First line holds column labels. Without one, columns are named `X1..Xd`.
    pub has_header: bool,
    pub columns: Option<Selection>,
    pub rows: Option<Selection>,
}

impl CsvOptions {
    pub fn with_header() -> Self {
        CsvOptions {
            has_header: true,
            ..Default::default()
        }
    }
}

/// One element of a selection list: a 1-based index, an inclusive 1-based
/// range, or a column label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SelectItem {
    Index(usize),
    Range(usize, usize),
    Name(String),
}

/// Comma-separated selection such as `1-4`, `1,4` or `Sepal.Length,4`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    items: Vec<SelectItem>,
}

impl Selection {
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |reason: &str| SkewError::BadSelection {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let mut items = Vec::new();
        for part in spec.split(',').map(str::trim) {
            if part.is_empty() {
                return Err(bad("empty element"));
            }
            let item = if let Some((lo, hi)) = part.split_once('-') {
                match (lo.trim().parse::<usize>(), hi.trim().parse::<usize>()) {
                    (Ok(lo), Ok(hi)) => {
                        if lo == 0 || hi < lo {
                            return Err(bad("ranges are 1-based and increasing"));
                        }
                        SelectItem::Range(lo, hi)
                    }
                    _ => SelectItem::Name(part.to_string()),
                }
            } else if let Ok(i) = part.parse::<usize>() {
                if i == 0 {
                    return Err(bad("indices are 1-based"));
                }
                SelectItem::Index(i)
            } else {
                SelectItem::Name(part.to_string())
            };
            items.push(item);
        }
        Ok(Selection { items })
    }

    /// Resolves to 0-based positions in a list of `len` labelled items.
    pub fn resolve(&self, labels: &[String]) -> Result<Vec<usize>> {
        let len = labels.len();
        let mut out = Vec::new();
        for item in &self.items {
            match item {
                SelectItem::Index(i) => {
                    if *i > len {
                        return Err(SkewError::precondition(format!("index {i} exceeds {len} available")));
                    }
                    out.push(i - 1);
                }
                SelectItem::Range(lo, hi) => {
                    if *hi > len {
                        return Err(SkewError::precondition(format!("range {lo}-{hi} exceeds {len} available")));
                    }
                    out.extend(lo - 1..*hi);
                }
                SelectItem::Name(name) => {
                    let pos = labels
                        .iter()
                        .position(|l| l == name)
                        .ok_or_else(|| SkewError::precondition(format!("no column named {name:?}")))?;
                    out.push(pos);
                }
            }
        }
        if out.is_empty() {
            return Err(SkewError::EmptySelection("selection resolved to nothing".into()));
        }
        Ok(out)
    }

    /// Resolves an index-only selection against `len` items.
    pub fn resolve_indices(&self, len: usize) -> Result<Vec<usize>> {
        if let Some(SelectItem::Name(name)) = self.items.iter().find(|i| matches!(i, SelectItem::Name(_))) {
            return Err(SkewError::BadSelection {
                spec: name.clone(),
                reason: "row selections take indices or ranges only".into(),
            });
        }
        self.resolve(&default_names(len))
    }
}

/// Reads comma-separated numeric data. Only the selected columns need to be
/// numeric, so a trailing label column can be skipped by selection.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<DataMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| SkewError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, opts)
}

pub fn read_csv<R: std::io::Read>(reader: R, opts: &CsvOptions) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    let width = if opts.has_header {
        rdr.headers()?.len()
    } else {
        records.first().map_or(0, csv::StringRecord::len)
    };
    let labels: Vec<String> = if opts.has_header {
        rdr.headers()?.iter().map(str::to_string).collect()
    } else {
        default_names(width)
    };
    if labels.is_empty() {
        return Err(SkewError::EmptySelection("input has no columns".into()));
    }

    let cols = match &opts.columns {
        Some(sel) => sel.resolve(&labels)?,
        None => (0..width).collect(),
    };
    let rows = match &opts.rows {
        Some(sel) => sel.resolve_indices(records.len())?,
        None => (0..records.len()).collect(),
    };
    if rows.is_empty() {
        return Err(SkewError::EmptySelection("no data rows".into()));
    }

    let mut values = DMatrix::zeros(rows.len(), cols.len());
    for (i, &r) in rows.iter().enumerate() {
        let rec = &records[r];
        for (j, &c) in cols.iter().enumerate() {
            let cell = rec.get(c).unwrap_or("");
            values[(i, j)] = cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| SkewError::NonNumeric {
                row: r + 1,
                column: labels[c].clone(),
                value: cell.to_string(),
            })?;
        }
    }
    let names = cols.iter().map(|&c| labels[c].clone()).collect();
    DataMatrix::new(values, names)
}

/// Arithmetic column means.
pub fn mean_vector(data: &DataMatrix) -> DVector<f64> {
    data.values.row_mean().transpose()
}

/// Columns minus their means.
pub fn centered(data: &DataMatrix) -> DMatrix<f64> {
    let mu = mean_vector(data);
    let mut c = data.values.clone();
    for mut row in c.row_iter_mut() {
        row -= mu.transpose();
    }
    c
}

/// Sample covariance with weight `1/n`.
pub fn covariance(data: &DataMatrix) -> Result<SpdMatrix> {
    let c = centered(data);
    let mut s = c.tr_mul(&c) / data.n() as f64;
    // exact symmetry as stored
    for i in 0..s.nrows() {
        for j in 0..i {
            let v = s[(i, j)];
            s[(j, i)] = v;
        }
    }
    check_definite(&s)?;
    Ok(SpdMatrix { values: s })
}

/// Inverse of the symmetric positive-definite square root.
pub fn inv_sqrt(s: &SpdMatrix) -> Result<DMatrix<f64>> {
    let eig = check_definite(&s.values)?;
    let scaled = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| l.sqrt().recip()));
    let v = &eig.eigenvectors;
    let r = v * DMatrix::from_diagonal(&scaled) * v.transpose();
    Ok((&r + r.transpose()) * 0.5)
}

/// `(x - mean) * inv_sqrt(cov)` row by row.
pub fn standardize(data: &DataMatrix) -> Result<DataMatrix> {
    let (z, _) = standardize_parts(data)?;
    DataMatrix::new(z, data.names.clone())
}

/// Standardized rows together with the whitening matrix that produced them.
pub(crate) fn standardize_parts(data: &DataMatrix) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let r = inv_sqrt(&covariance(data)?)?;
    Ok((centered(data) * &r, r))
}
