//! Bootstrap distribution and add-one p-value of a multivariate skewness
//! measure.
//!
//! Replicate `r` draws its rows from a ChaCha8 stream keyed by `(seed, r)`,
//! so results do not depend on how replicates are scheduled.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Result, SkewError};
use crate::ingest::DataMatrix;
use crate::measures;
use crate::par::{self, Parallelism};

/// Power-iteration budget for the directional measure inside replicates.
pub const DIRECTIONAL_ITERATIONS: usize = 5;
/// Draws allowed per replicate before a singular resample is fatal.
pub const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BootMeasure {
    Directional,
    Partial,
    Mardia,
}

impl BootMeasure {
    pub fn as_str(self) -> &'static str {
        match self {
            BootMeasure::Directional => "Directional",
            BootMeasure::Partial => "Partial",
            BootMeasure::Mardia => "Mardia",
        }
    }

    /// Smallest admissible number of resampled units for `d` variables.
    pub fn min_units(self, d: usize) -> usize {
        match self {
            BootMeasure::Partial => d + 2,
            _ => d + 1,
        }
    }

    /// The statistic on one dataset.
    pub fn statistic(self, data: &DataMatrix) -> Result<f64> {
        self.statistic_with(data, Parallelism::default())
    }

    fn statistic_with(self, data: &DataMatrix, mode: Parallelism) -> Result<f64> {
        let report = match self {
            BootMeasure::Mardia => measures::mardia_skewness(data)?,
            BootMeasure::Partial => measures::partial_skewness(data)?,
            BootMeasure::Directional => measures::directional_skewness_with(data, DIRECTIONAL_ITERATIONS, mode)?,
        };
        Ok(report.scalar().expect("scalar measure"))
    }
}

impl fmt::Display for BootMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BootMeasure {
    type Err = SkewError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "directional" => Ok(BootMeasure::Directional),
            "partial" => Ok(BootMeasure::Partial),
            "mardia" => Ok(BootMeasure::Mardia),
            _ => Err(SkewError::precondition(format!(
                "unknown bootstrap measure {s:?} (expected Directional, Partial or Mardia)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub measure: BootMeasure,
    pub seed: u64,
    pub observed: f64,
    pub replicates: Vec<f64>,
    pub pvalue: f64,
    pub histogram: Vec<HistogramBin>,
}

pub fn skew_boot(data: &DataMatrix, replicates: usize, units: usize, measure: BootMeasure, seed: u64) -> Result<BootstrapResult> {
    skew_boot_with(data, replicates, units, measure, seed, Parallelism::default())
}

pub fn skew_boot_with(
    data: &DataMatrix,
    replicates: usize,
    units: usize,
    measure: BootMeasure,
    seed: u64,
    mode: Parallelism,
) -> Result<BootstrapResult> {
    let d = data.d();
    if replicates == 0 {
        return Err(SkewError::precondition("replicates must be a positive integer"));
    }
    if units < measure.min_units(d) {
        let bound = match measure {
            BootMeasure::Partial => "the number of variables plus one",
            _ => "the number of variables",
        };
        return Err(SkewError::precondition(format!(
            "units must be greater than {bound} for {measure} skewness (units = {units}, variables = {d})"
        )));
    }
    if measure == BootMeasure::Directional && d < 2 {
        return Err(SkewError::precondition("directional skewness needs at least 2 variables"));
    }

    let observed = measure.statistic_with(data, mode)?;
    // replicates already run in parallel; keep the inner optimizer sequential
    let inner = Parallelism::Sequential;
    let stats = par::map_indexed(replicates, mode, |r| replicate(data, units, measure, seed, r, inner));
    let stats = stats.into_iter().collect::<Result<Vec<f64>>>()?;

    let exceed = stats.iter().filter(|&&s| s >= observed).count();
    let pvalue = (1 + exceed) as f64 / (replicates + 1) as f64;
    Ok(BootstrapResult {
        measure,
        seed,
        observed,
        histogram: sturges_histogram(&stats),
        replicates: stats,
        pvalue,
    })
}

fn replicate(data: &DataMatrix, units: usize, measure: BootMeasure, seed: u64, index: usize, mode: Parallelism) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let n = data.n();
    for _ in 0..MAX_REDRAWS {
        let rows: Vec<usize> = (0..units).map(|_| rng.random_range(0..n)).collect();
        let sample = data.select_rows(&rows)?;
        match measure.statistic_with(&sample, mode) {
            Err(SkewError::Singular { .. }) => continue,
            other => return other,
        }
    }
    Err(SkewError::RedrawExhausted {
        replicate: index,
        attempts: MAX_REDRAWS,
    })
}

/// `ceil(log2 R) + 1` equal-width bins spanning the replicate range.
pub fn sturges_histogram(values: &[f64]) -> Vec<HistogramBin> {
    if values.is_empty() {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return vec![HistogramBin {
            lower: lo,
            upper: hi,
            count: values.len(),
        }];
    }
    let bins = (values.len() as f64).log2().ceil() as usize + 1;
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            lower: lo + width * i as f64,
            upper: if i + 1 == bins { hi } else { lo + width * (i + 1) as f64 },
            count,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DataMatrix {
        DataMatrix::from_rows(&[
            vec![0.1, 1.0, 3.0],
            vec![0.4, 2.2, 1.0],
            vec![0.2, 0.3, 0.5],
            vec![3.5, 1.1, 0.9],
            vec![0.9, 5.0, 2.2],
            vec![0.3, 0.7, 7.5],
            vec![1.6, 0.2, 0.4],
            vec![0.05, 1.9, 1.3],
            vec![0.7, 0.6, 0.8],
            vec![2.1, 0.4, 0.1],
        ])
        .unwrap()
    }

    #[test]
    fn units_constraints() {
        let data = sample();
        assert!(skew_boot(&data, 5, 3, BootMeasure::Mardia, 1).is_err());
        assert!(skew_boot(&data, 5, 4, BootMeasure::Mardia, 1).is_ok());
        assert!(skew_boot(&data, 5, 4, BootMeasure::Partial, 1).is_err());
        assert!(skew_boot(&data, 5, 5, BootMeasure::Partial, 1).is_ok());
        assert!(skew_boot(&data, 0, 5, BootMeasure::Mardia, 1).is_err());
    }

    #[test]
    fn pvalue_grid_and_histogram_total() {
        let data = sample();
        for measure in [BootMeasure::Mardia, BootMeasure::Partial, BootMeasure::Directional] {
            let r = skew_boot(&data, 10, 25, measure, 7).unwrap();
            let k = r.pvalue * 11.0;
            assert!((k - k.round()).abs() < 1e-12 && (1.0..=11.0).contains(&k.round()));
            assert_eq!(r.histogram.iter().map(|b| b.count).sum::<usize>(), 10);
            assert_eq!(r.histogram.len(), 5);
            if measure != BootMeasure::Partial {
                assert!(r.replicates.iter().all(|&s| s >= 0.0));
            }
        }
    }

    #[test]
    fn deterministic_across_modes() {
        let data = sample();
        let a = skew_boot_with(&data, 12, 15, BootMeasure::Directional, 99, Parallelism::Sequential).unwrap();
        let b = skew_boot_with(&data, 12, 15, BootMeasure::Directional, 99, Parallelism::Parallel).unwrap();
        assert_eq!(a, b);
        let c = skew_boot(&data, 12, 15, BootMeasure::Directional, 100).unwrap();
        assert_ne!(a.replicates, c.replicates);
    }

    #[test]
    fn singular_resamples_exhaust_budget() {
        // two distinct rows: every resample of 4 units has rank <= 1 after centering
        let data = DataMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 2.0], vec![0.0, 0.0], vec![1.0, 2.0]]);
        // the full data is itself singular, so the observed statistic fails first
        let data = data.unwrap();
        assert!(matches!(skew_boot(&data, 3, 4, BootMeasure::Mardia, 1), Err(SkewError::Singular { .. })));
        let exhausted = replicate(&data, 4, BootMeasure::Mardia, 1, 0, Parallelism::Sequential);
        assert!(matches!(exhausted, Err(SkewError::RedrawExhausted { attempts: MAX_REDRAWS, .. })));
    }

    #[test]
    fn histogram_edges() {
        let h = sturges_histogram(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(h.len(), 3);
        assert_eq!(h[0].lower, 0.0);
        assert_eq!(h[2].upper, 3.0);
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), vec![1, 1, 2]);
        let flat = sturges_histogram(&[2.0, 2.0]);
        assert_eq!(flat.len(), 1);
        assert_eq!(flat[0].count, 2);
    }

    #[test]
    fn measure_names_parse() {
        assert_eq!("Directional".parse::<BootMeasure>().unwrap(), BootMeasure::Directional);
        assert_eq!("mardia".parse::<BootMeasure>().unwrap(), BootMeasure::Mardia);
        assert!("fisher".parse::<BootMeasure>().is_err());
    }
}
