use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel_density::SampleSet;
use crate::points::PointSet;

#[derive(Clone, Debug)]
struct Component {
    mean: Vec<f64>,
    cov: Vec<f64>,
    /// Lower Cholesky factor, row-major.
    chol: Vec<f64>,
    log_norm: f64,
}

impl Component {
    fn new(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.len() != d * d {
            return Err(Error::invalid(format!("covariance needs {} entries, got {}", d * d, cov.len())));
        }
        let m = DMatrix::from_row_slice(d, d, &cov);
        if (0..d).any(|i| (0..i).any(|j| (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * (1.0 + m[(i, j)].abs()))) {
            return Err(Error::invalid("covariance is not symmetric"));
        }
        let l = m.cholesky().ok_or_else(|| Error::invalid("covariance is not positive definite"))?.l();
        let chol: Vec<f64> = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| l[(i, j)]).collect();
        let log_det_half: f64 = (0..d).map(|i| l[(i, i)].ln()).sum();
        let log_norm = -0.5 * d as f64 * (2.0 * PI).ln() - log_det_half;
        Ok(Component { mean, cov, chol, log_norm })
    }

    fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `z = L⁻¹(x − μ)`.
    fn whiten(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut z = vec![0.0; d];
        for i in 0..d {
            let mut s = x[i] - self.mean[i];
            for j in 0..i {
                s -= self.chol[i * d + j] * z[j];
            }
            z[i] = s / self.chol[i * d + i];
        }
        z
    }

    /// `L⁻ᵀ z`.
    fn back(&self, z: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut y = vec![0.0; d];
        for i in (0..d).rev() {
            let mut s = z[i];
            for j in i + 1..d {
                s -= self.chol[j * d + i] * y[j];
            }
            y[i] = s / self.chol[i * d + i];
        }
        y
    }

    fn density(&self, x: &[f64]) -> f64 {
        let z = self.whiten(x);
        (self.log_norm - 0.5 * z.iter().map(|v| v * v).sum::<f64>()).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct MixtureSpec {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    /// Row-major `d × d` matrices.
    covariances: Vec<Vec<f64>>,
}

/// A finite Gaussian mixture `Σ πℓ N(μℓ, Σℓ)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "MixtureSpec", into = "MixtureSpec")]
pub struct GaussianMixture {
    weights: Vec<f64>,
    components: Vec<Component>,
}

impl TryFrom<MixtureSpec> for GaussianMixture {
    type Error = Error;

    fn try_from(s: MixtureSpec) -> Result<Self> {
        GaussianMixture::new(s.weights, s.means, s.covariances)
    }
}

impl From<GaussianMixture> for MixtureSpec {
    fn from(m: GaussianMixture) -> Self {
        MixtureSpec {
            weights: m.weights,
            means: m.components.iter().map(|c| c.mean.clone()).collect(),
            covariances: m.components.iter().map(|c| c.cov.clone()).collect(),
        }
    }
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covariances: Vec<Vec<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() || weights.len() != covariances.len() {
            return Err(Error::invalid("a mixture needs matching, non-empty weights, means and covariances"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("mixture weights must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("mixture weights sum to {total}, not 1")));
        }
        let d = means[0].len();
        if d == 0 || means.iter().any(|m| m.len() != d) {
            return Err(Error::invalid("component means must share a positive dimension"));
        }
        let components =
            means.into_iter().zip(covariances).map(|(m, c)| Component::new(m, c)).collect::<Result<_>>()?;
        Ok(GaussianMixture { weights, components })
    }

    /// Isotropic components `N(μℓ, σ²I)`.
    pub fn isotropic(weights: Vec<f64>, means: Vec<Vec<f64>>, sd: f64) -> Result<Self> {
        let covs = means
            .iter()
            .map(|m| {
                let d = m.len();
                (0..d * d).map(|k| if k % (d + 1) == 0 { sd * sd } else { 0.0 }).collect()
            })
            .collect();
        GaussianMixture::new(weights, means, covs)
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> Vec<&[f64]> {
        self.components.iter().map(|c| c.mean.as_slice()).collect()
    }

    pub fn covariances(&self) -> Vec<&[f64]> {
        self.components.iter().map(|c| c.cov.as_slice()).collect()
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(&self.components).map(|(w, c)| if *w > 0.0 { w * c.density(x) } else { 0.0 }).sum()
    }

    /// `∇p(x) = −Σ πℓ φℓ(x) Σℓ⁻¹(x − μℓ)`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        for (w, c) in self.weights.iter().zip(&self.components) {
            if *w == 0.0 {
                continue;
            }
            let z = c.whiten(x);
            let phi = (c.log_norm - 0.5 * z.iter().map(|v| v * v).sum::<f64>()).exp();
            for (gk, yk) in g.iter_mut().zip(c.back(&z)) {
                *gk -= w * phi * yk;
            }
        }
        g
    }

    /// Draws `n` points; the component of each draw is kept as its label.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SampleSet> {
        if n == 0 {
            return Err(Error::invalid("cannot sample zero points"));
        }
        let pick = WeightedIndex::new(&self.weights).map_err(|e| Error::invalid(e.to_string()))?;
        let d = self.dim();
        let mut coords = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let k = pick.sample(rng);
            let c = &self.components[k];
            let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            for i in 0..d {
                let lz: f64 = (0..=i).map(|j| c.chol[i * d + j] * z[j]).sum();
                coords.push(c.mean[i] + lz);
            }
            labels.push(k);
        }
        SampleSet::new(PointSet::new(d, coords)?)?.with_labels(labels)
    }

    /// The same mixture with `h²I` added to every covariance.
    pub fn smoothed(&self, bandwidth: f64) -> Result<SmoothedMixture> {
        SmoothedMixture::new(self.clone(), bandwidth)
    }
}

/// `p_h = p ⋆ K_h` for a Gaussian mixture `p` and Gaussian kernel `K_h`,
/// which is again a mixture with covariances `Σℓ + h²I`.
#[derive(Clone, Debug, Serialize)]
pub struct SmoothedMixture {
    base: GaussianMixture,
    bandwidth: f64,
    #[serde(skip)]
    smoothed: GaussianMixture,
}

impl SmoothedMixture {
    pub fn new(base: GaussianMixture, bandwidth: f64) -> Result<Self> {
        if !(bandwidth >= 0.0) || !bandwidth.is_finite() {
            return Err(Error::invalid(format!("bandwidth must be non-negative, got {bandwidth}")));
        }
        let d = base.dim();
        let h2 = bandwidth * bandwidth;
        let covs = base
            .components
            .iter()
            .map(|c| c.cov.iter().enumerate().map(|(k, v)| if k % (d + 1) == 0 { v + h2 } else { *v }).collect())
            .collect();
        let means = base.components.iter().map(|c| c.mean.clone()).collect();
        let smoothed = GaussianMixture::new(base.weights.clone(), means, covs)?;
        Ok(SmoothedMixture { base, bandwidth, smoothed })
    }

    pub fn base(&self) -> &GaussianMixture {
        &self.base
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.smoothed.density(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.smoothed.gradient(x)
    }

    /// The smoothed density as a plain mixture.
    pub fn as_mixture(&self) -> &GaussianMixture {
        &self.smoothed
    }
}
