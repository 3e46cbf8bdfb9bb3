use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::mixture::GaussianMixture;
use crate::error::{Error, Result};
use crate::kernel_density::SampleSet;
use crate::points::PointSet;

/// Simulation scenarios with a fixed mixture, level and bandwidth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Three isotropic components; `λ = 0.3`, `h = 0.2`.
    ThreeGmm,
    /// Six components forming four clusters; `λ = 0.05`, `h = 0.2`.
    FourMixture,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::ThreeGmm, Scenario::FourMixture];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::ThreeGmm => "three-gmm",
            Scenario::FourMixture => "four-mixture",
        }
    }

    pub fn level(self) -> f64 {
        match self {
            Scenario::ThreeGmm => 0.3,
            Scenario::FourMixture => 0.05,
        }
    }

    pub fn bandwidth(self) -> f64 {
        0.2
    }

    pub fn mixture(self) -> GaussianMixture {
        match self {
            Scenario::ThreeGmm => three_gmm(),
            Scenario::FourMixture => four_mixture(),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
            Error::invalid(format!("unknown scenario {s:?}; available: {}", names.join(", ")))
        })
    }
}

/// Equal-weight components at (0,0), (1,0), (1.5,0.5) with covariance `0.3²I`.
pub fn three_gmm() -> GaussianMixture {
    GaussianMixture::isotropic(
        vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.5, 0.5]],
        0.3,
    )
    .expect("preset parameters are valid")
}

/// Two tilted ellipses and two crosses made of paired thin components.
pub fn four_mixture() -> GaussianMixture {
    let horizontal = vec![0.33, 0.0, 0.0, 0.01];
    let vertical = vec![0.01, 0.0, 0.0, 0.33];
    GaussianMixture::new(
        vec![0.2, 0.2, 0.2, 0.2, 0.1, 0.1],
        vec![vec![-0.3, -0.3], vec![3.0, 3.0], vec![0.0, 3.0], vec![0.0, 3.0], vec![3.0, 0.0], vec![3.0, 0.0]],
        vec![
            vec![0.39, -0.28, -0.28, 0.39],
            vec![0.36, 0.30, 0.30, 0.36],
            horizontal.clone(),
            vertical.clone(),
            horizontal,
            vertical,
        ],
    )
    .expect("preset parameters are valid")
}

/// Five 3-D blobs, four of them chained by thin tubes, the fifth apart.
/// Labels are the blob index, or 5 for tube points.
pub fn five_clusters_tube<R: Rng + ?Sized>(per_cluster: usize, tube_points: usize, rng: &mut R) -> Result<SampleSet> {
    if per_cluster == 0 {
        return Err(Error::invalid("each cluster needs at least one point"));
    }
    let centers = [[0.0, 0.0, 0.0], [3.0, 0.0, 0.0], [3.0, 3.0, 0.0], [0.0, 3.0, 0.0], [1.5, 1.5, 3.0]];
    let blob = Normal::new(0.0, 0.3).expect("positive sd");
    let tube = Normal::new(0.0, 0.08).expect("positive sd");
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..per_cluster {
            coords.extend(c.iter().map(|v| v + blob.sample(rng)));
            labels.push(k);
        }
    }
    for seg in 0..3 {
        let (a, b) = (centers[seg], centers[seg + 1]);
        for _ in 0..tube_points {
            let t: f64 = rng.random();
            coords.extend((0..3).map(|i| a[i] + t * (b[i] - a[i]) + tube.sample(rng)));
        }
    }
    labels.resize(labels.len() + 3 * tube_points, 5);
    SampleSet::new(PointSet::new(3, coords)?)?.with_labels(labels)
}

/// Appends `extra` independent `N(0, sd²)` coordinates to every point.
pub fn with_noise_dims<R: Rng + ?Sized>(data: &SampleSet, extra: usize, sd: f64, rng: &mut R) -> Result<SampleSet> {
    if !(sd >= 0.0) {
        return Err(Error::invalid("noise sd must be non-negative"));
    }
    let d = data.dim() + extra;
    let mut coords = Vec::with_capacity(data.len() * d);
    for p in data.iter() {
        coords.extend_from_slice(p);
        for _ in 0..extra {
            let z: f64 = StandardNormal.sample(rng);
            coords.push(sd * z);
        }
    }
    let out = SampleSet::new(PointSet::new(d, coords)?)?;
    match data.labels() {
        Some(l) => out.with_labels(l.to_vec()),
        None => Ok(out),
    }
}

/// Synthetic eruption-duration (minutes) and waiting-time (minutes) pairs
/// shaped like the classic geyser data: a short/short and a long/long cluster.
pub fn old_faithful_like<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<SampleSet> {
    let mix = GaussianMixture::new(
        vec![0.35, 0.65],
        vec![vec![2.04, 54.5], vec![4.29, 80.0]],
        vec![vec![0.07, 0.45, 0.45, 34.0], vec![0.17, 0.95, 0.95, 35.0]],
    )?;
    mix.sample(n, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        let e = "nope".parse::<Scenario>().unwrap_err().to_string();
        assert!(e.contains("three-gmm") && e.contains("four-mixture"));
    }

    #[test]
    fn preset_parameters() {
        let m = three_gmm();
        assert_eq!(m.means(), vec![&[0.0, 0.0][..], &[1.0, 0.0], &[1.5, 0.5]]);
        assert!((m.covariances()[2][0] - 0.09).abs() < 1e-15);
        let f = four_mixture();
        assert_eq!(f.weights(), &[0.2, 0.2, 0.2, 0.2, 0.1, 0.1]);
        assert_eq!(f.covariances()[0], &[0.39, -0.28, -0.28, 0.39]);
        assert_eq!(f.covariances()[5], &[0.01, 0.0, 0.0, 0.33]);
    }

    #[test]
    fn tube_preset_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = five_clusters_tube(100, 50, &mut rng).unwrap();
        assert_eq!(s.len(), 650);
        assert_eq!(s.dim(), 3);
        let noisy = with_noise_dims(&s, 3, 0.1, &mut rng).unwrap();
        assert_eq!(noisy.dim(), 6);
        assert_eq!(noisy.point(7)[..3], s.point(7)[..]);
        assert_eq!(noisy.labels(), s.labels());
    }

    #[test]
    fn faithful_like_has_two_groups() {
        let s = old_faithful_like(272, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let long = s.iter().filter(|p| p[0] > 3.0).count();
        assert!(long > 130 && long < 220);
    }
}
