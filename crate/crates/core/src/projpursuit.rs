//! Mutually orthogonal projections of maximal skewness.
//!
//! Each direction is found by higher-order power iteration on the third
//! cumulant of the standardized data, `c <- normalize(K^T (c (x) c))`, from
//! several starting points, then refined by Newton steps on the sphere.
//! Later directions are searched for in the orthogonal complement of the
//! earlier ones (deflation).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SkewError};
use crate::ingest::{self, DataMatrix};
use crate::moments::{self, MomentKind, ThirdMomentMatrix};
use crate::par::{self, Parallelism};
use crate::symmetrize;

/// Number of random starting directions added to the block eigenvectors.
pub const RANDOM_RESTARTS: usize = 8;
const RESTART_SEED: u64 = 0x5EED_CAFE;
const STEP_TOL: f64 = 1e-12;
const NEWTON_STEPS: usize = 20;

/// Projection directions together with the projected data.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBasis {
    /// `d x k` coefficients applied to centered data in original units.
    pub directions: DMatrix<f64>,
    /// `d x k` orthonormal directions in the standardized space.
    pub standardized_directions: DMatrix<f64>,
    /// Attained skewness per column (or, for `min_skew`, the selected
    /// singular values).
    pub skewness: DVector<f64>,
    /// `n x k` projection scores.
    pub projected: DMatrix<f64>,
}

impl ProjectionBasis {
    pub(crate) fn from_standardized(z: &DMatrix<f64>, whitening: &DMatrix<f64>, std_dirs: DMatrix<f64>, skewness: DVector<f64>) -> Self {
        ProjectionBasis {
            directions: whitening * &std_dirs,
            projected: z * &std_dirs,
            standardized_directions: std_dirs,
            skewness,
        }
    }

    pub fn components(&self) -> usize {
        self.standardized_directions.ncols()
    }

    /// Projected scores as a data matrix with labels `P1..Pk`.
    pub fn projected_data(&self) -> Result<DataMatrix> {
        let names = (1..=self.components()).map(|j| format!("P{j}")).collect();
        DataMatrix::new(self.projected.clone(), names)
    }
}

pub fn max_skew(data: &DataMatrix, iterations: usize, components: usize) -> Result<ProjectionBasis> {
    max_skew_with(data, iterations, components, Parallelism::default())
}

pub fn max_skew_with(data: &DataMatrix, iterations: usize, components: usize, mode: Parallelism) -> Result<ProjectionBasis> {
    let d = data.d();
    if iterations == 0 {
        return Err(SkewError::precondition("iterations must be a positive integer"));
    }
    if components == 0 {
        return Err(SkewError::precondition("components must be a positive integer"));
    }
    if components >= d {
        return Err(SkewError::precondition(format!(
            "components must be < number of variables (components = {components}, variables = {d})"
        )));
    }
    let (z, whitening) = ingest::standardize_parts(data)?;

    let mut found: Vec<DVector<f64>> = Vec::with_capacity(components);
    for _ in 0..components {
        let q = complement_basis(&found, d);
        let reduced = &z * &q;
        let k = moments::third_moment_of_rows(&reduced, MomentKind::Standardized, mode);
        let u = maximize_cubic(&k, iterations, mode);
        found.push(&q * u);
    }
    let std_dirs = DMatrix::from_columns(&found);
    let projected = &z * &std_dirs;
    let skewness = DVector::from_iterator(components, projected.column_iter().map(|col| sample_skewness(col.iter().copied())));
    Ok(ProjectionBasis::from_standardized(&z, &whitening, std_dirs, skewness))
}

/// Orthonormal basis of the complement of the (orthonormal) `found` vectors.
fn complement_basis(found: &[DVector<f64>], d: usize) -> DMatrix<f64> {
    if found.is_empty() {
        return DMatrix::identity(d, d);
    }
    let c = DMatrix::from_columns(found);
    let projector = DMatrix::identity(d, d) - &c * c.transpose();
    let eig = SymmetricEigen::new(projector);
    let keep: Vec<usize> = (0..d).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    eig.eigenvectors.select_columns(&keep)
}

/// `(c (x) c)^T K c`, the third moment of the projection onto unit `c`.
pub(crate) fn cubic_form(k: &ThirdMomentMatrix, c: &DVector<f64>) -> f64 {
    c.dot(&contract(k, c))
}

/// `K^T (c (x) c)`.
fn contract(k: &ThirdMomentMatrix, c: &DVector<f64>) -> DVector<f64> {
    let d = k.d();
    let cc = DVector::from_fn(d * d, |r, _| c[r / d] * c[r % d]);
    k.values().tr_mul(&cc)
}

/// Unit vector maximizing the cubic form, signed so the form is nonnegative.
fn maximize_cubic(k: &ThirdMomentMatrix, iterations: usize, mode: Parallelism) -> DVector<f64> {
    let m = k.d();
    if m == 1 {
        let s = if k.get(0, 0, 0) < 0.0 { -1.0 } else { 1.0 };
        return DVector::from_element(1, s);
    }
    let starts = starting_points(k);
    let results = par::map_indexed(starts.len(), mode, |i| power_iterate(k, starts[i].clone(), iterations));
    let mut best = 0;
    for (i, (_, value)) in results.iter().enumerate() {
        if *value > results[best].1 {
            best = i;
        }
    }
    results.into_iter().nth(best).expect("at least one start").0
}

/// Eigenvectors of the block with the largest Frobenius norm, then fixed-seed
/// random unit vectors. Both are built in the frame of the right singular
/// vectors of `k`, which rotates with the data, so that rotated inputs get
/// rotated starts.
fn starting_points(k: &ThirdMomentMatrix) -> Vec<DVector<f64>> {
    let m = k.d();
    let frame = canonical_frame(k);
    let rotated = moments::transform_third(k, &frame.transpose()).expect("square frame");
    let mut dominant = 0;
    let mut best_norm = -1.0;
    for i in 0..m {
        let norm = moments::block(&rotated, i).expect("index in range").norm();
        if norm > best_norm {
            best_norm = norm;
            dominant = i;
        }
    }
    let block = moments::block(&rotated, dominant).expect("index in range");
    let eig = SymmetricEigen::new((&block + block.transpose()) * 0.5);
    let mut starts: Vec<DVector<f64>> = eig.eigenvectors.column_iter().map(|c| &frame * c).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    while starts.len() < m + RANDOM_RESTARTS {
        let v = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let norm = v.norm();
        if norm > 1e-3 {
            starts.push(&frame * (v / norm));
        }
    }
    starts
}

/// Right singular vectors of `k` by descending singular value, each signed
/// so its cubic form is nonnegative.
fn canonical_frame(k: &ThirdMomentMatrix) -> DMatrix<f64> {
    let (singular, right) = symmetrize::right_singular_pairs(k.values());
    let mut order: Vec<usize> = (0..singular.len()).collect();
    order.sort_by(|&a, &b| singular[b].total_cmp(&singular[a]));
    let mut frame = DMatrix::zeros(k.d(), k.d());
    for (col, &idx) in order.iter().enumerate() {
        let v = right.column(idx).into_owned();
        let v = if cubic_form(k, &v) < 0.0 { -v } else { v };
        frame.set_column(col, &v);
    }
    frame
}

/// Power iteration `c <- normalize(K^T (c (x) c))`. A step that would lower
/// the cubic form is retried with a growing shift `+ alpha c`; at
/// `alpha = 2 ||K||_F` every step is an ascent step, so the iterates cannot
/// cycle. The end point is then refined by Newton steps on the sphere.
fn power_iterate(k: &ThirdMomentMatrix, mut c: DVector<f64>, iterations: usize) -> (DVector<f64>, f64) {
    let alpha_max = 2.0 * k.values().norm();
    let mut value = cubic_form(k, &c);
    if value < 0.0 {
        c = -c;
        value = -value;
    }
    for _ in 0..iterations {
        let g = contract(k, &c);
        let mut alpha = 0.0;
        let (next, next_value) = loop {
            let v = &g + &c * alpha;
            let norm = v.norm();
            if norm > 0.0 {
                let cand = v / norm;
                let f = cubic_form(k, &cand);
                if f >= value || alpha >= alpha_max {
                    break (cand, f);
                }
            }
            alpha = if alpha == 0.0 { alpha_max / 64.0 } else { (alpha * 2.0).min(alpha_max) };
        };
        let step = (&next - &c).norm();
        c = next;
        value = next_value;
        if step < STEP_TOL {
            break;
        }
    }
    newton_polish(k, c, value)
}

/// Newton iterations for a critical point of the cubic form on the unit
/// sphere. Only steps that keep the form from decreasing are taken, and only
/// where the tangent Hessian is negative definite.
fn newton_polish(k: &ThirdMomentMatrix, mut c: DVector<f64>, mut value: f64) -> (DVector<f64>, f64) {
    let d = k.d();
    for _ in 0..NEWTON_STEPS {
        let h = DMatrix::from_fn(d, d, |i, j| (0..d).map(|l| c[l] * k.get(i, j, l)).sum::<f64>());
        let t = complement_basis(std::slice::from_ref(&c), d);
        let grad = t.tr_mul(&(&h * &c)) * 3.0;
        let hess = t.tr_mul(&((&h * 6.0 - DMatrix::identity(d, d) * (3.0 * value)) * &t));
        let Some(chol) = (-&hess).cholesky() else {
            break;
        };
        let eta = chol.solve(&grad);
        let cand = (&c + &t * &eta).normalize();
        let f = cubic_form(k, &cand);
        if !(f >= value) {
            break;
        }
        let step = (&cand - &c).norm();
        c = cand;
        value = f;
        if step < STEP_TOL {
            break;
        }
    }
    (c, value)
}

/// Sample skewness `m3 / m2^(3/2)` (weights `1/n`).
pub(crate) fn sample_skewness(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let mean = sum / n as f64;
    let (m2, m3) = values.fold((0.0, 0.0), |(a, b), v| {
        let e = v - mean;
        (a + e * e, b + e * e * e)
    });
    let (m2, m3) = (m2 / n as f64, m3 / n as f64);
    if m2 > 0.0 {
        m3 / m2.powf(1.5)
    } else {
        0.0
    }
}

/// Signed skewness of the projection `c^T x`; its square is the directional
/// skewness objective. Invariant to positive rescaling of `c`.
pub fn skewness_of_projection(data: &DataMatrix, c: &DVector<f64>) -> Result<f64> {
    if c.len() != data.d() {
        return Err(SkewError::mismatch(format!("direction of length {}", data.d()), c.len()));
    }
    if c.amax() == 0.0 {
        return Err(SkewError::precondition("projection direction must be nonzero"));
    }
    let centered = ingest::centered(data);
    let y = &centered * c;
    let var = y.norm_squared() / data.n() as f64;
    let scale = (data.values() * c).amax();
    if !(var > (scale * 1e-12).powi(2)) {
        return Err(SkewError::InvalidData("projection has zero variance".into()));
    }
    let m3 = y.iter().map(|v| v * v * v).sum::<f64>() / data.n() as f64;
    Ok(m3 / var.powf(1.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::fisher_skew;

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
        ])
        .unwrap()
    }

    #[test]
    fn coordinate_projection_is_fisher() {
        let data = sample();
        let fisher = fisher_skew(&data).unwrap();
        for j in 0..3 {
            let e = DVector::from_fn(3, |i, _| if i == j { 1.0 } else { 0.0 });
            assert!((skewness_of_projection(&data, &e).unwrap() - fisher[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_skewness_is_odd_and_scale_free() {
        let data = sample();
        let c = DVector::from_vec(vec![0.3, -1.2, 0.5]);
        let a = skewness_of_projection(&data, &c).unwrap();
        assert!((skewness_of_projection(&data, &(-&c)).unwrap() + a).abs() < 1e-12);
        assert!((skewness_of_projection(&data, &(&c * 2.0)).unwrap() - a).abs() < 1e-12);
        assert!(skewness_of_projection(&data, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn component_bounds() {
        let data = sample();
        let err = max_skew(&data, 10, 3).unwrap_err();
        assert!(err.to_string().contains("components must be < number of variables"));
        assert!(max_skew(&data, 0, 1).is_err());
        assert!(max_skew(&data, 10, 0).is_err());
    }

    #[test]
    fn basis_invariants() {
        let data = sample();
        let b = max_skew(&data, 100, 2).unwrap();
        let gram = b.standardized_directions.tr_mul(&b.standardized_directions);
        assert!((gram - DMatrix::identity(2, 2)).amax() < 1e-10);
        let cov = ingest::covariance(&b.projected_data().unwrap()).unwrap();
        assert!((cov.values() - DMatrix::identity(2, 2)).amax() < 1e-8);
        assert!(b.skewness[0].abs() >= b.skewness[1].abs());
        assert!(b.skewness[0] > 0.0);
        let centered = ingest::centered(&data);
        assert!((&centered * &b.directions - &b.projected).amax() < 1e-10);
    }

    #[test]
    fn modes_agree() {
        let data = sample();
        let a = max_skew_with(&data, 50, 2, Parallelism::Sequential).unwrap();
        let b = max_skew_with(&data, 50, 2, Parallelism::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
