//! Exact set distances between finite point sets.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::points::{check_dim, squared_distance, PointSet};

/// `d(x, A) = min_{a∈A} ‖x − a‖`; `+∞` for an empty set.
pub fn distance_to_set(x: &[f64], set: &PointSet) -> f64 {
    set.iter().map(|a| squared_distance(x, a)).fold(f64::INFINITY, f64::min).sqrt()
}

/// `max_{a∈A} min_{b∈B} ‖a − b‖`.
///
/// Exhaustive and exact: the inner scan stops early only once it can no
/// longer raise the running maximum, which does not change the result.
pub fn directed_max_dist(a: &PointSet, b: &PointSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::UndefinedHausdorff);
    }
    check_dim(a.dim(), b.dim())?;
    let best_sq = a
        .coords()
        .par_chunks_exact(a.dim())
        .fold(
            || 0.0f64,
            |running, p| {
                let mut nearest = f64::INFINITY;
                for q in b.iter() {
                    let d = squared_distance(p, q);
                    if d < nearest {
                        nearest = d;
                        if nearest <= running {
                            break;
                        }
                    }
                }
                running.max(nearest)
            },
        )
        .reduce(|| 0.0, f64::max);
    Ok(best_sq.sqrt())
}

/// Hausdorff distance `max(directed(A, B), directed(B, A))`.
///
/// Empty inputs are an error rather than a sentinel: a vanished level set
/// has no meaningful distance to anything.
pub fn hausdorff(a: &PointSet, b: &PointSet) -> Result<f64> {
    Ok(directed_max_dist(a, b)?.max(directed_max_dist(b, a)?))
}
