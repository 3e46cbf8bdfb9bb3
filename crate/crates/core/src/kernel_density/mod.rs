//! Gaussian kernel density estimation.
//!
//! `p̂_h(x) = 1/(n·h^d) Σᵢ K(‖x − Xᵢ‖/h)` with `K(u) = (2π)^(−d/2) e^(−u²/2)`.
//! Evaluation is direct (`O(n)` per query); grids use a separable
//! factorization of the Gaussian, see [`KernelBasis`].

mod basis;
mod grid;

pub use basis::KernelBasis;
pub use grid::{GridSpec, GridValues, DEFAULT_NODE_BUDGET};

use std::f64::consts::PI;
use std::ops::Deref;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::{check_dim, squared_distance, PointSet};

/// Observations `X₁..Xₙ` in ℝ^d: non-empty, all coordinates finite.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    points: PointSet,
    labels: Option<Vec<usize>>,
}

impl SampleSet {
    pub fn new(points: PointSet) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InsufficientData("a sample needs at least one point".into()));
        }
        if !points.all_finite() {
            return Err(Error::NonFinite("sample coordinates must be finite".into()));
        }
        Ok(SampleSet { points, labels: None })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        SampleSet::new(PointSet::from_rows(rows)?)
    }

    /// Attaches per-point labels (e.g. the generating mixture component).
    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.points.len() {
            return Err(Error::invalid("one label per point is required"));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    /// Per-axis mean and sample standard deviation (`n − 1` denominator).
    pub fn axis_moments(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len() as f64;
        let d = self.dim();
        let mut mean = vec![0.0; d];
        for p in self.iter() {
            for (m, x) in mean.iter_mut().zip(p) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for p in self.iter() {
            for k in 0..d {
                let dx = p[k] - mean[k];
                var[k] += dx * dx;
            }
        }
        let denom = if self.len() > 1 { n - 1.0 } else { 1.0 };
        let sd = var.into_iter().map(|v| (v / denom).sqrt()).collect();
        (mean, sd)
    }

    /// Per-axis bounding box.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in self.iter() {
            for k in 0..d {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }
}

impl Deref for SampleSet {
    type Target = PointSet;

    fn deref(&self) -> &PointSet {
        &self.points
    }
}

/// Normal-reference (Silverman) bandwidth
/// `h = σ̄ · (4/((d+2)·n))^(1/(d+4))`, with `σ̄` the mean per-axis standard
/// deviation.
pub fn silverman_bandwidth(data: &SampleSet) -> Result<f64> {
    let n = data.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("Silverman's rule needs at least 2 points, got {n}")));
    }
    let d = data.dim() as f64;
    let (_, sd) = data.axis_moments();
    let sigma = sd.iter().sum::<f64>() / sd.len() as f64;
    if !(sigma > 0.0) {
        return Err(Error::Degenerate("zero variance on every axis".into()));
    }
    Ok(sigma * (4.0 / ((d + 2.0) * n as f64)).powf(1.0 / (d + 4.0)))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Gaussian,
}

/// A fitted kernel density estimator. Immutable after construction.
#[derive(Clone, Debug)]
pub struct DensityModel {
    data: SampleSet,
    bandwidth: f64,
    kernel: Kernel,
    /// `1 / (n · h^d · (2π)^(d/2))`
    norm: f64,
    inv_two_h2: f64,
}

impl DensityModel {
    pub fn new(data: SampleSet, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::invalid(format!("bandwidth must be positive and finite, got {bandwidth}")));
        }
        let d = data.dim() as f64;
        let n = data.len() as f64;
        let norm = 1.0 / (n * bandwidth.powf(d) * (2.0 * PI).powf(d / 2.0));
        Ok(DensityModel {
            data,
            bandwidth,
            kernel: Kernel::Gaussian,
            norm,
            inv_two_h2: 1.0 / (2.0 * bandwidth * bandwidth),
        })
    }

    pub fn with_silverman(data: SampleSet) -> Result<Self> {
        let h = silverman_bandwidth(&data)?;
        DensityModel::new(data, h)
    }

    pub fn data(&self) -> &SampleSet {
        &self.data
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    /// Normalizing constant per unit of kernel weight.
    pub(crate) fn norm(&self) -> f64 {
        self.norm
    }

    pub(crate) fn inv_two_h2(&self) -> f64 {
        self.inv_two_h2
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.density_unchecked(x))
    }

    pub(crate) fn density_unchecked(&self, x: &[f64]) -> f64 {
        let s: f64 = self.data.iter().map(|xi| (-squared_distance(x, xi) * self.inv_two_h2).exp()).sum();
        self.norm * s
    }

    /// Analytic gradient `∇p̂_h(x) = norm · Σᵢ e^(−‖x−Xᵢ‖²/2h²) · (Xᵢ − x)/h²`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let d = self.dim();
        let mut g = vec![0.0; d];
        for xi in self.data.iter() {
            let w = (-squared_distance(x, xi) * self.inv_two_h2).exp();
            for k in 0..d {
                g[k] += w * (xi[k] - x[k]);
            }
        }
        let scale = self.norm / (self.bandwidth * self.bandwidth);
        g.iter_mut().for_each(|v| *v *= scale);
        Ok(g)
    }

    /// Evaluates at every point of `points`, in parallel.
    pub fn eval_many(&self, points: &PointSet) -> Result<Vec<f64>> {
        check_dim(self.dim(), points.dim())?;
        Ok(points.coords().par_chunks_exact(points.dim()).map(|p| self.density_unchecked(p)).collect())
    }

    /// Evaluates on every node of `grid`; layout is documented on [`GridValues`].
    pub fn eval_grid(&self, grid: &GridSpec) -> Result<GridValues> {
        self.eval_grid_with_budget(grid, DEFAULT_NODE_BUDGET)
    }

    pub fn eval_grid_with_budget(&self, grid: &GridSpec, node_budget: usize) -> Result<GridValues> {
        check_dim(self.dim(), grid.dim())?;
        let nodes = grid.node_count();
        if nodes > node_budget {
            return Err(Error::GridTooLarge { nodes, budget: node_budget });
        }
        let basis = KernelBasis::for_grid(self, grid)?;
        Ok(GridValues::new(grid.clone(), basis.evaluate(None)))
    }

    /// Default working grid: the data bounding box padded by `pad_bandwidths · h`.
    pub fn default_grid(&self, pad_bandwidths: f64, resolution: usize) -> Result<GridSpec> {
        let (mut lo, mut hi) = self.data.bounds();
        let pad = pad_bandwidths * self.bandwidth;
        lo.iter_mut().for_each(|v| *v -= pad);
        hi.iter_mut().for_each(|v| *v += pad);
        GridSpec::new(lo, hi, vec![resolution; self.dim()])
    }
}
