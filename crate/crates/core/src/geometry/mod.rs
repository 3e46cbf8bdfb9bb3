//! Level sets, set distances and ε-connectivity.

mod components;
mod contour;
mod hausdorff;

pub use components::{component_count, connected_components_eps};
pub use contour::{extract_contour_2d, refine_contour};
pub use hausdorff::{directed_max_dist, distance_to_set, hausdorff};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel_density::{DensityModel, GridSpec};
use crate::points::{check_dim, PointSet};

/// A polyline through contour vertices. Closed polylines do not repeat their
/// first vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub closed: bool,
    pub points: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelSetShape {
    Polylines(Vec<Polyline>),
    Points(Vec<Vec<f64>>),
}

/// Discretized level set `{x : p(x) = λ}`.
///
/// `tolerance` bounds `|p(v) − λ|` over the vertices `v`; for a bare
/// marching-squares extraction it is relative to the bilinear interpolant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetApprox {
    pub level: f64,
    pub tolerance: f64,
    #[serde(flatten)]
    pub shape: LevelSetShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

impl LevelSetApprox {
    pub fn dim(&self) -> Option<usize> {
        match &self.shape {
            LevelSetShape::Polylines(_) => Some(2),
            LevelSetShape::Points(p) => p.first().map(Vec::len),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_count() == 0
    }

    pub fn vertex_count(&self) -> usize {
        match &self.shape {
            LevelSetShape::Polylines(lines) => lines.iter().map(|l| l.points.len()).sum(),
            LevelSetShape::Points(p) => p.len(),
        }
    }

    pub fn polylines(&self) -> &[Polyline] {
        match &self.shape {
            LevelSetShape::Polylines(lines) => lines,
            LevelSetShape::Points(_) => &[],
        }
    }

    /// All vertices as a point set (dimension 2 for contours).
    pub fn vertices(&self) -> PointSet {
        match &self.shape {
            LevelSetShape::Polylines(lines) => {
                let coords = lines.iter().flat_map(|l| l.points.iter().flatten().copied()).collect();
                PointSet::new(2, coords).expect("contour vertices are planar")
            }
            LevelSetShape::Points(p) if p.is_empty() => PointSet::empty(1),
            LevelSetShape::Points(p) => PointSet::from_rows(p).expect("level-set points share a dimension"),
        }
    }
}

/// Contour of the KDE on `grid` (which must be 2-D), with the recorded
/// tolerance set to the largest `|p̂_h(v) − λ|` over the vertices.
pub fn contour_levelset(model: &DensityModel, grid: &GridSpec, level: f64) -> Result<LevelSetApprox> {
    let values = model.eval_grid(grid)?;
    let mut set = extract_contour_2d(&values, level)?;
    let densities = model.eval_many(&set.vertices())?;
    set.tolerance = densities.iter().map(|p| (p - level).abs()).fold(0.0, f64::max);
    Ok(set)
}

/// Point-cloud surrogate for a level set: the candidates whose estimated
/// density is within `tol` of `level`.
pub fn extract_levelset_points(
    model: &DensityModel,
    candidates: &PointSet,
    level: f64,
    tol: f64,
) -> Result<LevelSetApprox> {
    check_dim(model.dim(), candidates.dim())?;
    let densities = model.eval_many(candidates)?;
    filter_points(candidates, &densities, level, tol)
}

pub(crate) fn filter_points(candidates: &PointSet, densities: &[f64], level: f64, tol: f64) -> Result<LevelSetApprox> {
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::invalid(format!("tolerance must be non-negative, got {tol}")));
    }
    let points =
        candidates.iter().zip(densities).filter(|(_, &p)| (p - level).abs() <= tol).map(|(x, _)| x.to_vec()).collect();
    Ok(LevelSetApprox { level, tolerance: tol, shape: LevelSetShape::Points(points), grid: None })
}

/// Members of a reference point set lying in `{x : p(x) ≥ λ}`, with their
/// ε-connected component labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperLevelSetApprox {
    pub level: f64,
    pub eps: f64,
    /// Indices into the reference point set.
    pub members: Vec<usize>,
    /// Component label per member, numbered by smallest member index.
    pub labels: Vec<usize>,
}

impl UpperLevelSetApprox {
    /// Builds the upper level set from precomputed densities at each reference point.
    pub fn from_densities(reference: &PointSet, densities: &[f64], level: f64, eps: f64) -> Result<Self> {
        if densities.len() != reference.len() {
            return Err(Error::invalid("one density per reference point is required"));
        }
        let members: Vec<usize> = (0..reference.len()).filter(|&i| densities[i] >= level).collect();
        let labels = connected_components_eps(&reference.select(&members), eps)?;
        Ok(UpperLevelSetApprox { level, eps, members, labels })
    }

    pub fn new(model: &DensityModel, reference: &PointSet, level: f64, eps: f64) -> Result<Self> {
        let densities = model.eval_many(reference)?;
        Self::from_densities(reference, &densities, level, eps)
    }

    pub fn component_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }
}
