use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::PointSet;

/// Largest grid `eval_grid` will allocate unless told otherwise.
pub const DEFAULT_NODE_BUDGET: usize = 1 << 24;

/// A rectangular lattice over `[lower, upper]` with `resolution[k]` nodes on axis `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
    resolution: Vec<usize>,
}

impl GridSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, resolution: Vec<usize>) -> Result<Self> {
        let d = lower.len();
        if d == 0 || upper.len() != d || resolution.len() != d {
            return Err(Error::invalid("grid bounds and resolution must share a non-zero dimension"));
        }
        for k in 0..d {
            if !(lower[k].is_finite() && upper[k].is_finite()) {
                return Err(Error::NonFinite(format!("grid bounds on axis {k}")));
            }
            if !(lower[k] < upper[k]) {
                return Err(Error::invalid(format!(
                    "grid axis {k}: lower {} must be below upper {}",
                    lower[k], upper[k]
                )));
            }
            if resolution[k] < 2 {
                return Err(Error::invalid(format!("grid axis {k}: resolution must be at least 2")));
            }
        }
        Ok(GridSpec { lower, upper, resolution })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    /// Total node count, saturating on overflow.
    pub fn node_count(&self) -> usize {
        self.resolution.iter().fold(1usize, |acc, &r| acc.saturating_mul(r))
    }

    /// Coordinate of node `i` along `axis`.
    ///
    /// Computed as `lower + span · (i/(res−1))` so that nodes shared between
    /// a grid and its refinements land on bitwise identical coordinates.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        let t = i as f64 / (self.resolution[axis] - 1) as f64;
        self.lower[axis] + (self.upper[axis] - self.lower[axis]) * t
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.resolution[axis]).map(|i| self.coord(axis, i)).collect()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.resolution[axis] - 1) as f64
    }

    /// Length of a cell diagonal.
    pub fn cell_diagonal(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k).powi(2)).sum::<f64>().sqrt()
    }

    /// Row-major flat index: the last axis varies fastest.
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.resolution).fold(0, |acc, (&i, &r)| acc * r + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            idx[k] = flat % self.resolution[k];
            flat /= self.resolution[k];
        }
        idx
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).iter().enumerate().map(|(k, &i)| self.coord(k, i)).collect()
    }

    /// All nodes in flat-index order.
    pub fn nodes(&self) -> PointSet {
        let d = self.dim();
        let count = self.node_count();
        let mut coords = Vec::with_capacity(count * d);
        for flat in 0..count {
            coords.extend(self.node(flat));
        }
        PointSet::new(d, coords).expect("grid dimension is non-zero")
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).product()
    }
}

/// Values on the nodes of a grid, row-major with the last axis fastest:
/// for `d = 2`, `values[i·ny + j]` sits at `(x_i, y_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridValues {
    grid: GridSpec,
    values: Vec<f64>,
}

impl GridValues {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Self {
        assert_eq!(grid.node_count(), values.len(), "one value per grid node");
        GridValues { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.grid.flat_index(idx)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Trapezoid-rule integral over the grid box.
    pub fn trapezoid_integral(&self) -> f64 {
        let mut total = 0.0;
        for (flat, v) in self.values.iter().enumerate() {
            let idx = self.grid.multi_index(flat);
            let mut w = 1.0;
            for (k, &i) in idx.iter().enumerate() {
                if i == 0 || i == self.grid.resolution[k] - 1 {
                    w *= 0.5;
                }
            }
            total += w * v;
        }
        total * self.grid.cell_volume()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::new(vec![0.0], vec![0.0], vec![4]).is_err());
        assert!(GridSpec::new(vec![0.0], vec![1.0], vec![1]).is_err());
        assert!(GridSpec::new(vec![0.0, 0.0], vec![1.0], vec![4, 4]).is_err());
        assert!(GridSpec::new(vec![f64::NEG_INFINITY], vec![1.0], vec![4]).is_err());
    }

    #[test]
    fn flat_index_round_trip() {
        let g = GridSpec::new(vec![0.0; 3], vec![1.0; 3], vec![3, 4, 5]).unwrap();
        for flat in 0..g.node_count() {
            assert_eq!(g.flat_index(&g.multi_index(flat)), flat);
        }
        assert_eq!(g.flat_index(&[0, 0, 1]), 1);
        assert_eq!(g.flat_index(&[0, 1, 0]), 5);
        assert_eq!(g.node(g.node_count() - 1), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn trapezoid_of_constant_is_area() {
        let g = GridSpec::new(vec![0.0, -1.0], vec![2.0, 2.0], vec![5, 7]).unwrap();
        let v = GridValues::new(g.clone(), vec![1.0; g.node_count()]);
        assert!((v.trapezoid_integral() - 6.0).abs() < 1e-12);
    }
}
