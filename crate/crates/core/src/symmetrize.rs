//! Least-skewed linear projections.
//!
//! The standardized data are projected onto the right singular vectors of
//! the standardized third cumulant that belong to its smallest singular
//! values. When the cumulant is rank deficient those vectors span its null
//! space and the projections have a null third cumulant.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SkewError};
use crate::ingest::{self, DataMatrix};
use crate::measures::{self, SkewnessReport};
use crate::moments::{self, MomentKind};
use crate::par::Parallelism;
use crate::projpursuit::ProjectionBasis;

/// `dimension` least-skewed projections. `skewness` holds the matching
/// singular values, largest first.
pub fn min_skew(data: &DataMatrix, dimension: usize) -> Result<ProjectionBasis> {
    let d = data.d();
    if dimension < 2 || dimension > d {
        return Err(SkewError::precondition(format!(
            "dimension must be between 2 and the number of variables ({d}), got {dimension}"
        )));
    }
    let (z, whitening) = ingest::standardize_parts(data)?;
    let k = moments::third_moment_of_rows(&z, MomentKind::Standardized, Parallelism::default());

    let (singular, right) = right_singular_pairs(k.values());
    let mut order: Vec<usize> = (0..d).collect();
    // stable: ties keep the decomposition's order
    order.sort_by(|&a, &b| singular[b].total_cmp(&singular[a]));
    let chosen = &order[d - dimension..];

    let mut dirs = DMatrix::zeros(d, dimension);
    for (col, &idx) in chosen.iter().enumerate() {
        let mut v = right.column(idx).into_owned();
        let lead = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            v = -v;
        }
        dirs.set_column(col, &v);
    }
    let values = DVector::from_iterator(dimension, chosen.iter().map(|&i| singular[i]));
    Ok(ProjectionBasis::from_standardized(&z, &whitening, dirs, values))
}

/// Singular values and right singular vectors (as columns) of a tall matrix.
pub(crate) fn right_singular_pairs(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    (svd.singular_values.iter().copied().collect(), v_t.transpose())
}

/// Mardia skewness of the projected scores.
pub fn residual_skewness(basis: &ProjectionBasis, data: &DataMatrix) -> Result<SkewnessReport> {
    if basis.projected.nrows() != data.n() {
        return Err(SkewError::mismatch(
            format!("{} projected rows", data.n()),
            basis.projected.nrows(),
        ));
    }
    measures::mardia_skewness(&basis.projected_data()?)
}
