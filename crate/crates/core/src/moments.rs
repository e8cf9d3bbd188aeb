//! Third multivariate moments and cumulants as `d^2 x d` matrices.
//!
//! Entry `E[X_i X_j X_h]` lives at row `i*d + j`, column `h` (0-based), so
//! the matrix is `d` symmetric `d x d` blocks stacked on top of each other.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SkewError};
use crate::format::fmt_num;
use crate::ingest::{self, DataMatrix};
use crate::par::{self, Parallelism};

/// Rows summed sequentially before partial sums are combined pairwise.
const CHUNK_ROWS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentKind {
    Raw,
    Central,
    Standardized,
}

impl MomentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MomentKind::Raw => "raw",
            MomentKind::Central => "central",
            MomentKind::Standardized => "standardized",
        }
    }
}

impl fmt::Display for MomentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MomentKind {
    type Err = SkewError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(MomentKind::Raw),
            "central" => Ok(MomentKind::Central),
            "standardized" => Ok(MomentKind::Standardized),
            other => Err(SkewError::precondition(format!(
                "unknown moment kind {other:?} (expected raw, central or standardized)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThirdMomentMatrix {
    values: DMatrix<f64>,
    kind: MomentKind,
    d: usize,
}

impl ThirdMomentMatrix {
    /// Wraps a `d^2 x d` matrix. No symmetry check is made; see
    /// [`ThirdMomentMatrix::symmetry_defect`].
    pub fn from_matrix(values: DMatrix<f64>, kind: MomentKind) -> Result<Self> {
        let d = values.ncols();
        if d == 0 || values.nrows() != d * d {
            return Err(SkewError::mismatch(
                "a d^2 x d matrix",
                format!("{}x{}", values.nrows(), values.ncols()),
            ));
        }
        Ok(ThirdMomentMatrix { values, kind, d })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn kind(&self) -> MomentKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `E[X_i X_j X_h]`, 0-based.
    pub fn get(&self, i: usize, j: usize, h: usize) -> f64 {
        self.values[(i * self.d + j, h)]
    }

    /// Largest absolute difference between an entry and any of its index
    /// permutations. Zero for matrices built by [`third_moment`].
    pub fn symmetry_defect(&self) -> f64 {
        let d = self.d;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for h in 0..d {
                    let v = self.get(i, j, h);
                    for w in [self.get(i, h, j), self.get(j, i, h), self.get(j, h, i), self.get(h, i, j), self.get(h, j, i)] {
                        worst = worst.max((v - w).abs());
                    }
                }
            }
        }
        worst
    }

    /// Squared Frobenius norm (sum of squared entries).
    pub fn squared_norm(&self) -> f64 {
        self.values.norm_squared()
    }

    /// Writes the matrix as CSV preceded by a `# kind=<kind>` line.
    pub fn to_csv_string(&self, precision: usize) -> String {
        let mut out = format!("# kind={}\n", self.kind);
        for row in self.values.row_iter() {
            let cells: Vec<String> = row.iter().map(|&v| fmt_num(v, precision)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(k) = comment.trim().strip_prefix("kind=") {
                    kind = Some(k.trim().parse::<MomentKind>()?);
                }
                continue;
            }
            let row = line
                .split(',')
                .map(|c| {
                    c.trim().parse::<f64>().map_err(|_| SkewError::NonNumeric {
                        row: lineno + 1,
                        column: String::new(),
                        value: c.to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let kind = kind.ok_or_else(|| SkewError::InvalidData("missing `# kind=` header line".into()))?;
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(SkewError::InvalidData("ragged third-moment CSV".into()));
        }
        Self::from_matrix(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]), kind)
    }

    /// Replaces each entry by the mean over its index orbit, making the
    /// permutation symmetry exact.
    pub(crate) fn symmetrized(mut self) -> Self {
        let d = self.d;
        for (i, j, h) in sorted_triples(d) {
            let perms = [(i, j, h), (i, h, j), (j, i, h), (j, h, i), (h, i, j), (h, j, i)];
            let mean = perms.iter().map(|&(a, b, c)| self.get(a, b, c)).sum::<f64>() / 6.0;
            for (a, b, c) in perms {
                self.values[(a * d + b, c)] = mean;
            }
        }
        self
    }
}

/// All `(i, j, h)` with `i <= j <= h`, in lexicographic order.
fn sorted_triples(d: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::with_capacity(d * (d + 1) * (d + 2) / 6);
    for i in 0..d {
        for j in i..d {
            for h in j..d {
                out.push((i, j, h));
            }
        }
    }
    out
}

/// Sample third moment with weight `1/n` of raw, centered or standardized rows.
pub fn third_moment(data: &DataMatrix, kind: MomentKind) -> Result<ThirdMomentMatrix> {
    third_moment_with(data, kind, Parallelism::default())
}

pub fn third_moment_with(data: &DataMatrix, kind: MomentKind, mode: Parallelism) -> Result<ThirdMomentMatrix> {
    let rows = match kind {
        MomentKind::Raw => data.values().clone(),
        MomentKind::Central => ingest::centered(data),
        MomentKind::Standardized => ingest::standardize_parts(data)?.0,
    };
    Ok(third_moment_of_rows(&rows, kind, mode))
}

/// Third moment of the rows of `rows` taken as they are.
pub(crate) fn third_moment_of_rows(rows: &DMatrix<f64>, kind: MomentKind, mode: Parallelism) -> ThirdMomentMatrix {
    let (n, d) = rows.shape();
    let triples = sorted_triples(d);
    let chunks = n.div_ceil(CHUNK_ROWS);
    let partials = par::map_indexed(chunks, mode, |c| {
        let mut acc = vec![0.0; triples.len()];
        for r in c * CHUNK_ROWS..((c + 1) * CHUNK_ROWS).min(n) {
            for (slot, &(i, j, h)) in acc.iter_mut().zip(&triples) {
                *slot += rows[(r, i)] * rows[(r, j)] * rows[(r, h)];
            }
        }
        acc
    });
    let sums = par::pairwise_reduce(partials, &|mut a: Vec<f64>, b: Vec<f64>| {
        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        a
    })
    .unwrap_or_else(|| vec![0.0; triples.len()]);

    let inv_n = 1.0 / n as f64;
    let mut values = DMatrix::zeros(d * d, d);
    for (&(i, j, h), s) in triples.iter().zip(sums) {
        let v = s * inv_n;
        for (a, b, c) in [(i, j, h), (i, h, j), (j, i, h), (j, h, i), (h, i, j), (h, j, i)] {
            values[(a * d + b, c)] = v;
        }
    }
    ThirdMomentMatrix { values, kind, d }
}

/// Second raw moment `(1/n) sum x x^T`.
pub fn second_moment(data: &DataMatrix) -> DMatrix<f64> {
    data.values().tr_mul(data.values()) / data.n() as f64
}

/// Third cumulant from raw moments:
/// `M3 - M2 (x) mu - mu (x) M2 - vec(M2) mu^T + 2 mu (x) mu^T (x) mu`.
pub fn cumulant_from_moments(m3: &ThirdMomentMatrix, m2: &DMatrix<f64>, mu: &DVector<f64>) -> Result<ThirdMomentMatrix> {
    let d = m3.d;
    if m3.kind != MomentKind::Raw {
        return Err(SkewError::precondition(format!("expected a raw third moment, got {}", m3.kind)));
    }
    if m2.shape() != (d, d) || mu.len() != d {
        return Err(SkewError::mismatch(
            format!("M2 {d}x{d} and mu of length {d}"),
            format!("M2 {}x{}, mu {}", m2.nrows(), m2.ncols(), mu.len()),
        ));
    }
    let mu_col = DMatrix::from_column_slice(d, 1, mu.as_slice());
    let vec_m2 = DMatrix::from_column_slice(d * d, 1, m2.as_slice());
    let k = &m3.values - kronecker(m2, &mu_col) - kronecker(&mu_col, m2) - vec_m2 * mu_col.transpose()
        + kronecker(&kronecker(&mu_col, &mu_col.transpose()), &mu_col) * 2.0;
    Ok(ThirdMomentMatrix::from_matrix(k, MomentKind::Central)?.symmetrized())
}

/// Third moment of `A x`: `(A (x) A) M3 A^T`, a `k^2 x k` matrix.
pub fn transform_third(m3: &ThirdMomentMatrix, a: &DMatrix<f64>) -> Result<ThirdMomentMatrix> {
    if a.ncols() != m3.d {
        return Err(SkewError::mismatch(format!("A with {} columns", m3.d), format!("{} columns", a.ncols())));
    }
    let values = kronecker(a, a) * &m3.values * a.transpose();
    let kind = match m3.kind {
        MomentKind::Standardized => {
            let gram = a * a.transpose();
            if (gram - DMatrix::identity(a.nrows(), a.nrows())).amax() < 1e-10 {
                MomentKind::Standardized
            } else {
                MomentKind::Central
            }
        }
        k => k,
    };
    Ok(ThirdMomentMatrix::from_matrix(values, kind)?.symmetrized())
}

/// The `i`-th (0-based) `d x d` block `E[X_i x x^T]`.
pub fn block(m3: &ThirdMomentMatrix, i: usize) -> Result<DMatrix<f64>> {
    if i >= m3.d {
        return Err(SkewError::precondition(format!("block index {i} out of range (d = {})", m3.d)));
    }
    Ok(m3.values.rows(i * m3.d, m3.d).into_owned())
}

/// Kronecker product; entry `(i*r + k, j*s + l)` is `A[i,j] * B[k,l]`.
pub fn kronecker(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, s) = b.shape();
    DMatrix::from_fn(a.nrows() * r, a.ncols() * s, |row, col| a[(row / r, col / s)] * b[(row % r, col % s)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DataMatrix {
        DataMatrix::from_rows(&[
            vec![1.0, 0.5, -2.0],
            vec![2.0, 1.5, 0.0],
            vec![0.0, 3.0, 1.0],
            vec![4.0, -1.0, 2.5],
            vec![1.5, 0.0, 0.7],
            vec![-1.0, 2.0, 3.0],
        ])
        .unwrap()
    }

    #[test]
    fn kronecker_small_cases() {
        let b = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(kronecker(&DMatrix::from_element(1, 1, 1.0), &b), b);
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert_eq!(kronecker(&i2, &i2), DMatrix::identity(4, 4));
        let e1 = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        assert_eq!(kronecker(&e1, &e1), DMatrix::from_row_slice(1, 4, &[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn kronecker_layout() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = DMatrix::from_row_slice(2, 1, &[10.0, 20.0]);
        let k = kronecker(&a, &b);
        assert_eq!(k, DMatrix::from_row_slice(4, 2, &[10.0, 20.0, 20.0, 40.0, 30.0, 40.0, 60.0, 80.0]));
    }

    #[test]
    fn central_moment_vanishes_for_reflected_pool() {
        let data = sample();
        let mu = ingest::mean_vector(&data);
        let n = data.n();
        let pooled = DMatrix::from_fn(2 * n, 3, |r, c| {
            let x = data.values()[(r % n, c)];
            if r < n { x } else { 2.0 * mu[c] - x }
        });
        let m = third_moment(&DataMatrix::from_matrix(pooled).unwrap(), MomentKind::Central).unwrap();
        assert!(m.values().amax() < 1e-12);
    }

    #[test]
    fn cumulant_identity_matches_direct_central() {
        let data = sample();
        let raw = third_moment(&data, MomentKind::Raw).unwrap();
        let k = cumulant_from_moments(&raw, &second_moment(&data), &ingest::mean_vector(&data)).unwrap();
        let direct = third_moment(&data, MomentKind::Central).unwrap();
        assert!((k.values() - direct.values()).amax() < 1e-10);
    }

    #[test]
    fn cumulant_at_zero_mean_is_identity_map() {
        let raw = third_moment(&sample(), MomentKind::Raw).unwrap();
        let k = cumulant_from_moments(&raw, &DMatrix::identity(3, 3), &DVector::zeros(3)).unwrap();
        assert!((k.values() - raw.values()).amax() < 1e-14);
    }

    #[test]
    fn univariate_symmetric_sample() {
        let data = DataMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let raw = third_moment(&data, MomentKind::Raw).unwrap();
        let k = cumulant_from_moments(&raw, &second_moment(&data), &ingest::mean_vector(&data)).unwrap();
        assert!(k.values()[(0, 0)].abs() < 1e-12);
        assert_eq!(block(&raw, 0).unwrap()[(0, 0)], 3.0);
    }

    #[test]
    fn cumulant_rejects_wrong_kind_and_shape() {
        let data = sample();
        let c = third_moment(&data, MomentKind::Central).unwrap();
        assert!(cumulant_from_moments(&c, &second_moment(&data), &ingest::mean_vector(&data)).is_err());
        let raw = third_moment(&data, MomentKind::Raw).unwrap();
        assert!(cumulant_from_moments(&raw, &DMatrix::zeros(2, 2), &DVector::zeros(3)).is_err());
    }

    #[test]
    fn transform_by_identity_and_projection() {
        let data = sample();
        let m = third_moment(&data, MomentKind::Central).unwrap();
        let same = transform_third(&m, &DMatrix::identity(3, 3)).unwrap();
        assert!((same.values() - m.values()).amax() < 1e-14);

        let a = DMatrix::from_row_slice(2, 3, &[0.3, -1.0, 2.0, 1.1, 0.4, -0.2]);
        let t = transform_third(&m, &a).unwrap();
        let projected = DataMatrix::from_matrix(data.values() * a.transpose()).unwrap();
        let direct = third_moment(&projected, MomentKind::Central).unwrap();
        assert!((t.values() - direct.values()).amax() < 1e-10);
        assert!(transform_third(&m, &DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn blocks_commute_indices() {
        let m = third_moment(&sample(), MomentKind::Raw).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let bi = block(&m, i).unwrap();
                let bj = block(&m, j).unwrap();
                for h in 0..3 {
                    assert_eq!(bi[(j, h)], bj[(i, h)]);
                }
            }
        }
        assert!(block(&m, 3).is_err());
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let data = DataMatrix::from_matrix(DMatrix::from_fn(1000, 4, |i, j| ((i * 7 + j * 13) % 17) as f64 * 0.37 - (j as f64))).unwrap();
        let a = third_moment_with(&data, MomentKind::Central, Parallelism::Sequential).unwrap();
        let b = third_moment_with(&data, MomentKind::Central, Parallelism::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip_keeps_kind() {
        let m = third_moment(&sample(), MomentKind::Standardized).unwrap();
        let text = m.to_csv_string(15);
        assert!(text.starts_with("# kind=standardized\n"));
        let back = ThirdMomentMatrix::from_csv_str(&text).unwrap();
        assert_eq!(back.kind(), MomentKind::Standardized);
        assert_eq!(back.symmetry_defect(), 0.0);
        assert!((back.values() - m.values()).amax() < 1e-13);
        assert!(ThirdMomentMatrix::from_csv_str("1,2\n").is_err());
    }
}
