//! Bootstrap confidence sets for density level sets.
//!
//! Two losses are supported. The Hausdorff loss `Haus(D̂*, D̂_h)` yields a
//! dilation `D̂_h ⊕ ŵ` of the estimated level set; the supremum loss
//! `sup|p̂* − p̂_h|` yields a density band `|p̂_h(x) − λ| ≤ m̂`, optionally
//! scaled by `√p̂_h(x)`. Inverting either set gives the simultaneous
//! pointwise level tests in [`pointwise`].

mod bootstrap;
mod engine;
pub mod pointwise;

pub use bootstrap::{bootstrap_resample, empirical_quantile, resample_counts, resample_indices};
pub use engine::{
    default_levelset_route, method1_hausdorff_ci, method2_scaled_ci, method2_sup_ci, run_bootstrap, BandOutcome,
    BootstrapOutcome, BootstrapPlan, EvalSet, HausdorffOutcome, LevelSetRoute, MethodOutcome, DEFAULT_SCALED_FLOOR,
};
pub use pointwise::{decide, pointwise_tests, PointwiseDecision, Region};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::distance_to_set;
use crate::kernel_density::DensityModel;
use crate::points::{check_dim, PointSet};

pub const DEFAULT_REPLICATES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Hausdorff loss between bootstrap and estimated level sets.
    Hausdorff,
    /// Supremum loss of the density.
    Sup,
    /// Supremum loss scaled by `1/√p̂_h`.
    Scaled,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Hausdorff, Method::Sup, Method::Scaled];

    pub fn name(self) -> &'static str {
        match self {
            Method::Hausdorff => "hausdorff",
            Method::Sup => "sup",
            Method::Scaled => "scaled",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hausdorff" => Ok(Method::Hausdorff),
            "sup" => Ok(Method::Sup),
            "scaled" => Ok(Method::Scaled),
            other => Err(Error::invalid(format!("unknown method {other:?}; expected one of hausdorff, sup, scaled"))),
        }
    }
}

/// Replicate count, seed and significance levels for a bootstrap run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    /// Sorted ascending, each strictly inside `(0, 1)`.
    pub alphas: Vec<f64>,
}

impl BootstrapConfig {
    pub fn new(replicates: usize, seed: u64, mut alphas: Vec<f64>) -> Result<Self> {
        if replicates == 0 {
            return Err(Error::invalid("at least one bootstrap replicate is required"));
        }
        if alphas.is_empty() {
            return Err(Error::invalid("at least one significance level is required"));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::invalid(format!("significance level {a} is not inside (0, 1)")));
        }
        alphas.sort_by(f64::total_cmp);
        alphas.dedup();
        Ok(BootstrapConfig { replicates, seed, alphas })
    }

    pub(crate) fn validate(&self) -> Result<()> {
        BootstrapConfig::new(self.replicates, self.seed, self.alphas.clone()).map(|_| ())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Replicates whose level set vanished; their loss is recorded as `+∞`.
    pub empty_replicates: usize,
    /// Replicates where some point of one set was farther than the
    /// Hausdorff loss from the other set. Always zero for a correct run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inclusion_failures: Option<usize>,
    /// Points where the supremum is taken.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_set: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_points: Option<usize>,
    /// Vertices of the estimated level set found outside a density band.
    /// Zero unless the contour discretization error exceeds the half-width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate_outside_band: Option<usize>,
    /// Density below which points are left out of the scaled supremum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
}

/// A confidence set for the level set `D_h` at one significance level.
///
/// Hausdorff-loss sets carry a `radius` (length units); band sets carry a
/// `half_width` (density units, or density/√density for `scaled`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSet {
    pub method: Method,
    pub alpha: f64,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    pub bandwidth: f64,
    #[serde(rename = "B")]
    pub replicates: usize,
    pub seed: u64,
    pub diagnostics: Diagnostics,
}

impl ConfidenceSet {
    /// The radius or half-width, whichever applies.
    pub fn threshold(&self) -> f64 {
        self.radius.or(self.half_width).unwrap_or(0.0)
    }

    /// Membership of `x` given `density = p̂_h(x)`. Hausdorff-loss sets need
    /// the estimated level set they dilate; points exactly on the level are
    /// members by definition.
    pub fn contains_at(&self, x: &[f64], density: f64, estimate: Option<&PointSet>) -> Result<bool> {
        let gap = (density - self.lambda).abs();
        match self.method {
            Method::Sup => Ok(gap <= self.threshold()),
            Method::Scaled => Ok(gap <= self.threshold() * density.max(0.0).sqrt()),
            Method::Hausdorff => {
                if gap == 0.0 {
                    return Ok(true);
                }
                let est =
                    estimate.ok_or_else(|| Error::invalid("a Hausdorff-loss set needs its estimated level set"))?;
                if est.is_empty() {
                    return Ok(false);
                }
                check_dim(est.dim(), x.len())?;
                Ok(distance_to_set(x, est) <= self.threshold())
            }
        }
    }

    pub fn contains(&self, model: &DensityModel, estimate: Option<&PointSet>, x: &[f64]) -> Result<bool> {
        let density = model.eval(x)?;
        self.contains_at(x, density, estimate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(BootstrapConfig::new(0, 1, vec![0.1]).is_err());
        assert!(BootstrapConfig::new(10, 1, vec![]).is_err());
        assert!(BootstrapConfig::new(10, 1, vec![0.0]).is_err());
        assert!(BootstrapConfig::new(10, 1, vec![1.0]).is_err());
        let c = BootstrapConfig::new(10, 1, vec![0.1, 0.05, 0.1]).unwrap();
        assert_eq!(c.alphas, vec![0.05, 0.1]);
    }

    #[test]
    fn method_parsing() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("l2".parse::<Method>().is_err());
    }

    fn set(method: Method, threshold: f64) -> ConfidenceSet {
        let (radius, half_width) = match method {
            Method::Hausdorff => (Some(threshold), None),
            _ => (None, Some(threshold)),
        };
        ConfidenceSet {
            method,
            alpha: 0.1,
            lambda: 0.2,
            radius,
            half_width,
            bandwidth: 0.3,
            replicates: 10,
            seed: 1,
            diagnostics: Diagnostics::default(),
        }
    }

    #[test]
    fn band_membership() {
        let s = set(Method::Sup, 0.05);
        assert!(s.contains_at(&[0.0], 0.2, None).unwrap());
        assert!(s.contains_at(&[0.0], 0.24, None).unwrap());
        assert!(!s.contains_at(&[0.0], 0.26, None).unwrap());
        let s = set(Method::Scaled, 0.1);
        // half-width 0.1·√0.25 = 0.05
        assert!(s.contains_at(&[0.0], 0.25, None).unwrap());
        assert!(!s.contains_at(&[0.0], 0.01, None).unwrap());
        assert!(s.contains_at(&[0.0], 0.2, None).unwrap());
    }

    #[test]
    fn dilation_membership() {
        let s = set(Method::Hausdorff, 1.0);
        let est = PointSet::from_rows(&[[0.0, 0.0]]).unwrap();
        assert!(s.contains_at(&[0.6, 0.8], 0.0, Some(&est)).unwrap());
        assert!(!s.contains_at(&[0.6, 0.9], 0.0, Some(&est)).unwrap());
        assert!(s.contains_at(&[9.0, 9.0], 0.2, Some(&est)).unwrap());
        assert!(s.contains_at(&[0.0, 0.0], 0.1, None).is_err());
    }

    #[test]
    fn json_fields() {
        let v = serde_json::to_value(set(Method::Hausdorff, 0.5)).unwrap();
        assert_eq!(v["method"], "hausdorff");
        assert_eq!(v["radius"], 0.5);
        assert!(v.get("half_width").is_none());
        assert_eq!(v["B"], 10);
        assert_eq!(v["diagnostics"]["empty_replicates"], 0);
        let v = serde_json::to_value(set(Method::Sup, 0.5)).unwrap();
        assert_eq!(v["half_width"], 0.5);
        let back: ConfidenceSet = serde_json::from_value(v).unwrap();
        assert_eq!(back, set(Method::Sup, 0.5));
    }
}
