//! Simultaneous pointwise tests of `p_h(x) ≥ λ` and `p_h(x) ≤ λ`.
//!
//! Points outside the confidence set are decided: `T_in = 1` when the
//! estimate lies above the level there, `T_out = 1` when it lies at or below.
//! Points inside the set are left undecided.

use serde::{Deserialize, Serialize};

use super::ConfidenceSet;
use crate::error::Result;
use crate::kernel_density::DensityModel;
use crate::points::PointSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// Significantly above the level.
    InsideHigh,
    /// Significantly below the level.
    InsideLow,
    /// Inside the confidence set; no decision.
    Band,
}

impl Region {
    pub fn color(self) -> &'static str {
        match self {
            Region::InsideHigh => "yellow",
            Region::InsideLow => "green",
            Region::Band => "blue",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointwiseDecision {
    pub t_in: bool,
    pub t_out: bool,
    pub region: Region,
}

pub fn decide(density: f64, level: f64, in_set: bool) -> PointwiseDecision {
    let t_in = !in_set && density >= level;
    let t_out = !in_set && density <= level;
    let region = if t_in {
        Region::InsideHigh
    } else if t_out {
        Region::InsideLow
    } else {
        Region::Band
    };
    PointwiseDecision { t_in, t_out, region }
}

/// Tests at `x`. Hausdorff-loss sets need the estimated level set they
/// dilate as `estimate`.
pub fn pointwise_tests(
    model: &DensityModel,
    set: &ConfidenceSet,
    estimate: Option<&PointSet>,
    x: &[f64],
) -> Result<PointwiseDecision> {
    let density = model.eval(x)?;
    let in_set = set.contains_at(x, density, estimate)?;
    Ok(decide(density, set.lambda, in_set))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{Diagnostics, Method};
    use crate::SampleSet;

    fn band(half_width: f64, lambda: f64) -> ConfidenceSet {
        ConfidenceSet {
            method: Method::Sup,
            alpha: 0.1,
            lambda,
            radius: None,
            half_width: Some(half_width),
            bandwidth: 0.5,
            replicates: 10,
            seed: 0,
            diagnostics: Diagnostics::default(),
        }
    }

    #[test]
    fn far_point_is_significantly_low() {
        let model = DensityModel::new(SampleSet::from_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap(), 0.5).unwrap();
        let d = pointwise_tests(&model, &band(0.01, 0.1), None, &[50.0, 50.0]).unwrap();
        assert_eq!(d, PointwiseDecision { t_in: false, t_out: true, region: Region::InsideLow });
        assert_eq!(d.region.color(), "green");
    }

    #[test]
    fn peak_is_significantly_high() {
        let model = DensityModel::new(SampleSet::from_rows(&[[0.0]]).unwrap(), 1.0).unwrap();
        // peak density ≈ 0.3989
        let d = pointwise_tests(&model, &band(0.05, 0.2), None, &[0.0]).unwrap();
        assert!(d.t_in && !d.t_out);
        assert_eq!(d.region.color(), "yellow");
    }

    #[test]
    fn band_points_are_undecided() {
        let d = decide(0.21, 0.2, true);
        assert!(!d.t_in && !d.t_out);
        assert_eq!(d.region, Region::Band);
        assert_eq!(Region::Band.color(), "blue");
    }

    #[test]
    fn tests_never_both_fire_off_the_level() {
        for &(p, inside) in &[(0.1, false), (0.3, false), (0.1, true), (0.3, true)] {
            let d = decide(p, 0.2, inside);
            assert!(!(d.t_in && d.t_out));
        }
    }

    #[test]
    fn region_json_names() {
        assert_eq!(serde_json::to_value(Region::InsideHigh).unwrap(), "inside-high");
        assert_eq!(serde_json::to_value(Region::InsideLow).unwrap(), "inside-low");
    }
}
