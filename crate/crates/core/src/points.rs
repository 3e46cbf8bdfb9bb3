//! Flat row-major storage for sets of points in ℝ^d.

use crate::error::{Error, Result};

/// `n` points of dimension `dim`, stored row-major in one buffer.
///
/// Unlike [`SampleSet`](crate::SampleSet) a point set may be empty; level
/// sets above the density maximum are empty point sets.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("point dimension must be at least 1"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(PointSet { dim, coords })
    }

    pub fn empty(dim: usize) -> Self {
        PointSet { dim: dim.max(1), coords: Vec::new() }
    }

    /// Builds a point set from rows; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::invalid("cannot infer dimension from zero rows"));
        };
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(dim * rows.len());
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::invalid(format!("row {i} has {} coordinates, expected {dim}", row.len())));
            }
            coords.extend_from_slice(row);
        }
        PointSet::new(dim, coords)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        check_dim(self.dim, p.len())?;
        self.coords.extend_from_slice(p);
        Ok(())
    }

    /// Appends all points of `other`.
    pub fn extend(&mut self, other: &PointSet) -> Result<()> {
        check_dim(self.dim, other.dim)?;
        self.coords.extend_from_slice(&other.coords);
        Ok(())
    }

    pub fn select(&self, indices: &[usize]) -> PointSet {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        PointSet { dim: self.dim, coords }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}
