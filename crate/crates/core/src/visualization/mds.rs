use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::points::{squared_distance, PointSet};

/// Classical (Torgerson) MDS of `points` into the plane.
///
/// Squared distances are double-centered and the two leading eigenvectors
/// are scaled by the square roots of their eigenvalues (negative ones
/// clamp to zero). Each axis is then flipped so that its largest-magnitude
/// coordinate is positive, with ties going to the first such point.
pub fn classical_mds(points: &PointSet) -> Result<Vec<[f64; 2]>> {
    let k = points.len();
    if k == 0 {
        return Err(Error::invalid("MDS needs at least one point"));
    }
    if !points.all_finite() {
        return Err(Error::NonFinite("MDS input".into()));
    }
    if k == 1 {
        return Ok(vec![[0.0, 0.0]]);
    }
    if k == 2 {
        let half = squared_distance(points.point(0), points.point(1)).sqrt() / 2.0;
        return Ok(vec![[half, 0.0], [-half, 0.0]]);
    }
    let d2 = DMatrix::from_fn(k, k, |i, j| squared_distance(points.point(i), points.point(j)));
    if d2.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("pairwise distances".into()));
    }
    let row_means: Vec<f64> = (0..k).map(|i| d2.row(i).sum() / k as f64).collect();
    let grand = row_means.iter().sum::<f64>() / k as f64;
    let b = DMatrix::from_fn(k, k, |i, j| -0.5 * (d2[(i, j)] - row_means[i] - row_means[j] + grand));
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&c)));

    let mut out = vec![[0.0; 2]; k];
    for (axis, &col) in order.iter().take(2).enumerate() {
        let scale = eig.eigenvalues[col].max(0.0).sqrt();
        let v = eig.eigenvectors.column(col);
        let mut lead = 0;
        for i in 1..k {
            if v[i].abs() > v[lead].abs() {
                lead = i;
            }
        }
        let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..k {
            out[i][axis] = sign * scale * v[i];
        }
    }
    Ok(out)
}
