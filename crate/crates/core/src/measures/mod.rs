//! Fisher, Mardia, partial and directional skewness with parametric p-values.

mod chi2;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use self::chi2::{chi2_sf, gamma_q, ln_gamma};
use crate::error::{Result, SkewError};
use crate::format::fmt_num;
use crate::ingest::{self, DataMatrix};
use crate::moments::{self, MomentKind, ThirdMomentMatrix};
use crate::par::Parallelism;
use crate::projpursuit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Fisher,
    Mardia,
    Partial,
    Directional,
}

impl MeasureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MeasureKind::Fisher => "fisher",
            MeasureKind::Mardia => "mardia",
            MeasureKind::Partial => "partial",
            MeasureKind::Directional => "directional",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SkewValue {
    Scalar(f64),
    PerVariable(Vec<f64>),
}

/// A measure's value with its chi-square test when one exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkewnessReport {
    pub measure: MeasureKind,
    pub value: SkewValue,
    pub vector: Option<Vec<f64>>,
    pub statistic: Option<f64>,
    pub dof: Option<usize>,
    pub pvalue: Option<f64>,
}

impl SkewnessReport {
    /// Scalar value; `None` for per-variable Fisher reports.
    pub fn scalar(&self) -> Option<f64> {
        match self.value {
            SkewValue::Scalar(v) => Some(v),
            SkewValue::PerVariable(_) => None,
        }
    }

    /// `key=value` lines; vectors are comma-joined.
    pub fn to_key_value(&self, precision: usize) -> String {
        let join = |v: &[f64]| v.iter().map(|&x| fmt_num(x, precision)).collect::<Vec<_>>().join(",");
        let mut out = format!("measure={}\n", self.measure.as_str());
        match &self.value {
            SkewValue::Scalar(v) => out.push_str(&format!("value={}\n", fmt_num(*v, precision))),
            SkewValue::PerVariable(v) => out.push_str(&format!("value={}\n", join(v))),
        }
        if let Some(v) = &self.vector {
            out.push_str(&format!("vector={}\n", join(v)));
        }
        if let Some(s) = self.statistic {
            out.push_str(&format!("statistic={}\n", fmt_num(s, precision)));
        }
        if let Some(k) = self.dof {
            out.push_str(&format!("dof={k}\n"));
        }
        if let Some(p) = self.pvalue {
            out.push_str(&format!("pvalue={}\n", fmt_num(p, precision)));
        }
        out
    }
}

fn require_n_above(data: &DataMatrix, min: usize, what: &str) -> Result<()> {
    if data.n() <= min {
        return Err(SkewError::precondition(format!(
            "{what} needs more than {min} observations, got {}",
            data.n()
        )));
    }
    Ok(())
}

/// Per-column third central moment over the cubed standard deviation.
pub fn fisher_skew(data: &DataMatrix) -> Result<DVector<f64>> {
    let c = ingest::centered(data);
    let n = data.n() as f64;
    let mut out = DVector::zeros(data.d());
    for (j, col) in c.column_iter().enumerate() {
        let m2 = col.iter().map(|v| v * v).sum::<f64>() / n;
        let m3 = col.iter().map(|v| v * v * v).sum::<f64>() / n;
        let scale = data.values().column(j).amax().max(f64::MIN_POSITIVE);
        if m2 <= (scale * 1e-12).powi(2) {
            return Err(SkewError::InvalidData(format!("column {:?} has zero variance", data.names()[j])));
        }
        out[j] = m3 / m2.powf(1.5);
    }
    Ok(out)
}

pub fn fisher_report(data: &DataMatrix) -> Result<SkewnessReport> {
    Ok(SkewnessReport {
        measure: MeasureKind::Fisher,
        value: SkewValue::PerVariable(fisher_skew(data)?.iter().copied().collect()),
        vector: None,
        statistic: None,
        dof: None,
        pvalue: None,
    })
}

/// Mardia's skewness: the squared norm of the standardized third cumulant,
/// tested with `n b / 6 ~ chi2(d(d+1)(d+2)/6)`.
pub fn mardia_skewness(data: &DataMatrix) -> Result<SkewnessReport> {
    let k = moments::third_moment(data, MomentKind::Standardized)?;
    Ok(mardia_from_cumulant(&k, data.n()))
}

pub(crate) fn mardia_from_cumulant(k: &ThirdMomentMatrix, n: usize) -> SkewnessReport {
    let d = k.d();
    let value = k.squared_norm();
    let statistic = n as f64 * value / 6.0;
    let dof = d * (d + 1) * (d + 2) / 6;
    SkewnessReport {
        measure: MeasureKind::Mardia,
        value: SkewValue::Scalar(value),
        vector: None,
        statistic: Some(statistic),
        dof: Some(dof),
        pvalue: Some(chi2_sf(statistic, dof)),
    }
}

/// Mardia's skewness as `(1/n^2) sum_{a,b} [(x_a - mu)^T S^-1 (x_b - mu)]^3`,
/// using the plain inverse of the covariance.
pub fn mardia_double_sum(data: &DataMatrix) -> Result<f64> {
    let s = ingest::covariance(data)?;
    let s_inv = s
        .values()
        .clone()
        .cholesky()
        .ok_or_else(|| SkewError::InvalidData("covariance not positive definite".into()))?
        .inverse();
    let c = ingest::centered(data);
    let g: DMatrix<f64> = &c * s_inv * c.transpose();
    let n = data.n() as f64;
    Ok(g.iter().map(|v| v * v * v).sum::<f64>() / (n * n))
}

/// Mori-Rohatgi-Szekely vector: the sample mean of `(z^T z) z` over
/// standardized rows.
pub fn mori_vector(data: &DataMatrix) -> Result<DVector<f64>> {
    let z = standardized_rows(data)?;
    let mut acc = DVector::zeros(data.d());
    for row in z.row_iter() {
        let r2 = row.norm_squared();
        acc += row.transpose() * r2;
    }
    Ok(acc / data.n() as f64)
}

/// The same vector as `K3z^T vec(I)`.
pub fn mori_vector_from_cumulant(k: &ThirdMomentMatrix) -> DVector<f64> {
    let d = k.d();
    let vec_i = DVector::from_fn(d * d, |r, _| if r / d == r % d { 1.0 } else { 0.0 });
    k.values().tr_mul(&vec_i)
}

/// Partial skewness `||gamma||^2` tested with `n b / (2(d+2)) ~ chi2(d)`.
pub fn partial_skewness(data: &DataMatrix) -> Result<SkewnessReport> {
    require_n_above(data, data.d() + 1, "partial skewness")?;
    let gamma = mori_vector(data)?;
    Ok(partial_from_vector(gamma, data.n()))
}

fn partial_from_vector(gamma: DVector<f64>, n: usize) -> SkewnessReport {
    let d = gamma.len();
    let value = gamma.norm_squared();
    let statistic = n as f64 * value / (2.0 * (d as f64 + 2.0));
    SkewnessReport {
        measure: MeasureKind::Partial,
        value: SkewValue::Scalar(value),
        vector: Some(gamma.iter().copied().collect()),
        statistic: Some(statistic),
        dof: Some(d),
        pvalue: Some(chi2_sf(statistic, d)),
    }
}

/// Largest squared skewness over all projections, found by
/// [`projpursuit::max_skew`] with a single component.
pub fn directional_skewness(data: &DataMatrix, iterations: usize) -> Result<SkewnessReport> {
    directional_skewness_with(data, iterations, Parallelism::default())
}

pub fn directional_skewness_with(data: &DataMatrix, iterations: usize, mode: Parallelism) -> Result<SkewnessReport> {
    let basis = projpursuit::max_skew_with(data, iterations, 1, mode)?;
    let gamma = basis.skewness[0];
    Ok(SkewnessReport {
        measure: MeasureKind::Directional,
        value: SkewValue::Scalar(gamma * gamma),
        vector: Some(basis.directions.column(0).iter().copied().collect()),
        statistic: None,
        dof: None,
        pvalue: None,
    })
}

fn standardized_rows(data: &DataMatrix) -> Result<DMatrix<f64>> {
    Ok(ingest::standardize(data)?.values().clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skewed_sample() -> DataMatrix {
        DataMatrix::from_rows(&[
            vec![0.1, 1.0, 3.0],
            vec![0.4, 2.2, 1.0],
            vec![0.2, 0.3, 0.5],
            vec![3.5, 1.1, 0.9],
            vec![0.9, 5.0, 2.2],
            vec![0.3, 0.7, 7.5],
            vec![1.6, 0.2, 0.4],
            vec![0.05, 1.9, 1.3],
        ])
        .unwrap()
    }

    fn reflected_pool(data: &DataMatrix) -> DataMatrix {
        let mu = ingest::mean_vector(data);
        let n = data.n();
        DataMatrix::from_matrix(DMatrix::from_fn(2 * n, data.d(), |r, c| {
            let x = data.values()[(r % n, c)];
            if r < n { x } else { 2.0 * mu[c] - x }
        }))
        .unwrap()
    }

    #[test]
    fn fisher_of_symmetric_column_is_zero() {
        let data = DataMatrix::from_rows(&[vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        assert!(fisher_skew(&data).unwrap()[0].abs() < 1e-15);
    }

    #[test]
    fn fisher_rejects_constant_column() {
        let data = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 2.0], vec![4.0, 2.0]]).unwrap();
        assert!(fisher_skew(&data).is_err());
    }

    #[test]
    fn mardia_two_paths_agree() {
        let data = skewed_sample();
        let a = mardia_skewness(&data).unwrap().scalar().unwrap();
        let b = mardia_double_sum(&data).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn mori_two_paths_agree() {
        let data = skewed_sample();
        let a = mori_vector(&data).unwrap();
        let k = moments::third_moment(&data, MomentKind::Standardized).unwrap();
        let b = mori_vector_from_cumulant(&k);
        assert!((a - b).amax() < 1e-10);
    }

    #[test]
    fn mori_univariate_is_fisher() {
        let data = DataMatrix::from_rows(&[vec![0.0], vec![1.0], vec![1.5], vec![7.0]]).unwrap();
        let g = mori_vector(&data).unwrap()[0];
        let f = fisher_skew(&data).unwrap()[0];
        assert!((g - f).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pool_is_unskewed() {
        let pooled = reflected_pool(&skewed_sample());
        let m = mardia_skewness(&pooled).unwrap();
        assert!(m.scalar().unwrap() < 1e-12);
        assert!((m.pvalue.unwrap() - 1.0).abs() < 1e-12);
        let p = partial_skewness(&pooled).unwrap();
        assert!(p.scalar().unwrap() < 1e-12);
        assert!((p.pvalue.unwrap() - 1.0).abs() < 1e-12);
        assert!(mori_vector(&pooled).unwrap().amax() < 1e-12);
        let dir = directional_skewness(&pooled, 50).unwrap();
        assert!(dir.scalar().unwrap() < 1e-12);
    }

    #[test]
    fn partial_is_norm_of_vector_and_bounded() {
        let data = skewed_sample();
        let p = partial_skewness(&data).unwrap();
        let v = DVector::from_vec(p.vector.clone().unwrap());
        assert!((p.scalar().unwrap() - v.norm_squared()).abs() < 1e-10);
        let m = mardia_skewness(&data).unwrap().scalar().unwrap();
        assert!(p.scalar().unwrap() <= data.d() as f64 * m + 1e-12);
    }

    #[test]
    fn partial_needs_enough_rows() {
        let data = DataMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 3.0]]).unwrap();
        assert!(matches!(partial_skewness(&data), Err(SkewError::Precondition(_))));
    }

    #[test]
    fn key_value_rendering() {
        let r = partial_from_vector(DVector::from_vec(vec![0.5, 0.25]), 100);
        let text = r.to_key_value(6);
        assert!(text.starts_with("measure=partial\nvalue=0.3125\nvector=0.5,0.25\n"));
        assert!(text.contains("dof=2\n"));
    }
}
