#![allow(dead_code)]

use std::path::PathBuf;

use multiskew::ingest::{self, CsvOptions, DataMatrix, Selection};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn iris_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join("iris.csv")
}

pub fn load(columns: &str, rows: Option<&str>) -> DataMatrix {
    let opts = CsvOptions {
        has_header: true,
        columns: Some(Selection::parse(columns).unwrap()),
        rows: rows.map(|r| Selection::parse(r).unwrap()),
    };
    ingest::load_csv(iris_path(), &opts).unwrap()
}

/// The four measurements on all 150 flowers.
pub fn iris() -> DataMatrix {
    load("1-4", None)
}

/// The first 50 rows (setosa).
pub fn setosa() -> DataMatrix {
    load("1-4", Some("1-50"))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn exponential(rng: &mut ChaCha8Rng) -> f64 {
    -rng.random_range(f64::EPSILON..1.0f64).ln()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| normal(rng))
}

/// Random matrix with condition number kept moderate.
pub fn random_invertible(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    loop {
        let a = random_matrix(rng, d, d);
        let s = a.clone().singular_values();
        if s.min() > 0.2 * s.max() {
            return a;
        }
    }
}

/// Data pooled with its reflection through its mean.
pub fn reflected_pool(data: &DataMatrix) -> DataMatrix {
    let mu = ingest::mean_vector(data);
    let n = data.n();
    DataMatrix::from_matrix(DMatrix::from_fn(2 * n, data.d(), |r, c| {
        let x = data.values()[(r % n, c)];
        if r < n {
            x
        } else {
            2.0 * mu[c] - x
        }
    }))
    .unwrap()
}

/// Plain `m3 / m2^1.5` of a sample.
pub fn skewness_oracle(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = v.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

/// Prints a one-line verdict and fails the test when `ok` is false.
pub fn verdict(criterion: &str, ok: bool, detail: impl std::fmt::Display) {
    println!("{} criterion {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {criterion} failed: {detail}");
}
