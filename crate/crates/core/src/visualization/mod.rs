//! Cluster-graph visualization of mode clusters across density levels.
//!
//! Each local mode becomes a circle placed by classical MDS, sized by the
//! fraction of data it holds above the level; modes whose high-density
//! basins touch are joined by edges. Stacking several levels gives the
//! tomographic view, and levels `λ − m̂_{1−α}` give the confidence view.

mod mds;
mod svg;

pub use mds::classical_mds;
pub use svg::{emit_svg, render_levelset_svg, render_svg, LevelSetPlot, RegionRaster};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::UpperLevelSetApprox;
use crate::kernel_density::DensityModel;
use crate::mode_clustering::{basin_adjacency, BasinAssignment, ModeClustering};

/// `r_ℓ(λ)`: fraction of all data points assigned to mode `ℓ` whose density
/// is at least `λ`, from densities precomputed at the data points.
pub fn mode_index_from_densities(assignment: &BasinAssignment, densities: &[f64], level: f64) -> Result<Vec<f64>> {
    if densities.len() != assignment.len() {
        return Err(Error::invalid("one density per assigned point is required"));
    }
    let mut counts = vec![0usize; assignment.n_modes];
    for (&label, &p) in assignment.labels.iter().zip(densities) {
        if p >= level {
            counts[label] += 1;
        }
    }
    let n = assignment.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// `r_ℓ(λ)` for every mode; `assignment` must label the model's data points.
pub fn mode_index(assignment: &BasinAssignment, model: &DensityModel, level: f64) -> Result<Vec<f64>> {
    if assignment.len() != model.data().len() {
        return Err(Error::invalid("the assignment must cover every data point"));
    }
    let densities = model.eval_many(model.data())?;
    mode_index_from_densities(assignment, &densities, level)
}

/// A level to draw, optionally tagged with the significance level it came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl LevelSpec {
    pub fn plain(lambda: f64) -> Self {
        LevelSpec { lambda, alpha: None }
    }
}

/// Levels `λ − m̂_{1−α}` for `(α, m̂)` pairs, clamped below at `1e-12` and
/// sorted ascending.
pub fn confidence_levels(level: f64, half_widths: &[(f64, f64)]) -> Result<Vec<LevelSpec>> {
    if !(level > 0.0) {
        return Err(Error::invalid(format!("the level must be positive, got {level}")));
    }
    let mut out: Vec<LevelSpec> = half_widths
        .iter()
        .map(|&(alpha, m)| LevelSpec { lambda: (level - m).max(1e-12), alpha: Some(alpha) })
        .collect();
    out.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(b.alpha.unwrap_or(0.0).total_cmp(&a.alpha.unwrap_or(0.0))));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphMode {
    pub id: usize,
    pub pos2d: [f64; 2],
    pub density: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub mode: usize,
    /// The mode index `r_ℓ(λ)`; drawn radius is proportional to it.
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    /// `r_a(λ) + r_b(λ)`; drawn stroke width is proportional to it.
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphLevel {
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub circles: Vec<Circle>,
    pub edges: Vec<GraphEdge>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Style {
    pub width: f64,
    pub height: f64,
    /// Radius of the largest circle as a fraction of the canvas width.
    pub max_radius_frac: f64,
    /// Stroke width of the widest edge, in pixels.
    pub max_edge_width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

impl Default for Style {
    fn default() -> Self {
        Style { width: 640.0, height: 520.0, max_radius_frac: 0.1, max_edge_width: 12.0, title: None }
    }
}

/// Modes embedded in the plane with per-level circles and edges. Levels are
/// ascending; higher levels are drawn on top.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterGraph {
    pub modes: Vec<GraphMode>,
    pub levels: Vec<GraphLevel>,
    pub style: Style,
}

impl ClusterGraph {
    /// Largest mode index over all levels.
    pub fn max_index(&self) -> f64 {
        self.levels.iter().flat_map(|l| l.circles.iter().map(|c| c.r)).fold(0.0, f64::max)
    }
}

/// Assembles the cluster graph for the given levels.
///
/// `clustering` must come from mean shift started at the model's data
/// points. Edges at each level follow [`basin_adjacency`] with radius `eps`.
pub fn build_cluster_graph(
    clustering: &ModeClustering,
    model: &DensityModel,
    levels: &[LevelSpec],
    eps: f64,
    style: Style,
) -> Result<ClusterGraph> {
    if levels.is_empty() {
        return Err(Error::invalid("at least one level is required"));
    }
    if let Some(l) = levels.iter().find(|l| !(l.lambda > 0.0) || !l.lambda.is_finite()) {
        return Err(Error::invalid(format!("levels must be positive and finite, got {}", l.lambda)));
    }
    if levels.windows(2).any(|w| w[1].lambda < w[0].lambda) {
        return Err(Error::invalid("levels must be sorted ascending"));
    }
    let assignment = &clustering.assignment;
    let data = model.data().points();
    if assignment.len() != data.len() {
        return Err(Error::invalid("the assignment must cover every data point"));
    }
    let positions = classical_mds(&clustering.modes.points()?)?;
    let modes = positions
        .iter()
        .zip(&clustering.modes.densities)
        .enumerate()
        .map(|(id, (&pos2d, &density))| GraphMode { id, pos2d, density })
        .collect();

    let densities = model.eval_many(data)?;
    let mut out = Vec::with_capacity(levels.len());
    for spec in levels {
        let r = mode_index_from_densities(assignment, &densities, spec.lambda)?;
        let circles: Vec<Circle> =
            r.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(mode, &v)| Circle { mode, r: v }).collect();
        let high = UpperLevelSetApprox::from_densities(data, &densities, spec.lambda, eps)?;
        let edges = basin_adjacency(assignment, data, &high, eps)?
            .into_iter()
            .map(|e| GraphEdge { a: e.a, b: e.b, width: r[e.a] + r[e.b] })
            .collect();
        out.push(GraphLevel { lambda: spec.lambda, alpha: spec.alpha, circles, edges });
    }
    if out.iter().all(|l| l.circles.is_empty()) {
        return Err(Error::NothingToDraw);
    }
    Ok(ClusterGraph { modes, levels: out, style })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode_clustering::{find_modes, AscentConfig};
    use crate::{PointSet, SampleSet};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn assignment(labels: &[usize], n_modes: usize) -> BasinAssignment {
        BasinAssignment {
            labels: labels.to_vec(),
            iterations: vec![1; labels.len()],
            converged: vec![true; labels.len()],
            n_modes,
        }
    }

    #[test]
    fn hand_counted_indices() {
        //  point  label  density
        //  0      0      0.50
        //  1      0      0.10
        //  2      1      0.30
        //  3      1      0.30
        //  4      2      0.05
        //  5      0      0.25
        let a = assignment(&[0, 0, 1, 1, 2, 0], 3);
        let d = [0.50, 0.10, 0.30, 0.30, 0.05, 0.25];
        assert_eq!(mode_index_from_densities(&a, &d, 0.0).unwrap(), vec![3.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0]);
        assert_eq!(mode_index_from_densities(&a, &d, 0.25).unwrap(), vec![2.0 / 6.0, 2.0 / 6.0, 0.0]);
        assert_eq!(mode_index_from_densities(&a, &d, 0.3).unwrap(), vec![1.0 / 6.0, 2.0 / 6.0, 0.0]);
        assert_eq!(mode_index_from_densities(&a, &d, 0.6).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn confidence_levels_order_and_clamp() {
        let l = confidence_levels(0.1, &[(0.5, 0.01), (0.95, 0.0), (0.05, 0.2)]).unwrap();
        assert_eq!(l[0], LevelSpec { lambda: 1e-12, alpha: Some(0.05) });
        assert!((l[1].lambda - 0.09).abs() < 1e-15);
        assert_eq!(l[2], LevelSpec { lambda: 0.1, alpha: Some(0.95) });
        assert!(confidence_levels(0.0, &[]).is_err());
    }

    fn two_blob_model(gap: f64) -> (DensityModel, ModeClustering) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let mut coords = Vec::new();
        for k in 0..200 {
            coords.push(if k < 120 { 0.0 } else { gap } + noise.sample(&mut rng));
            coords.push(noise.sample(&mut rng));
        }
        let pts = PointSet::new(2, coords).unwrap();
        let model = DensityModel::new(SampleSet::new(pts.clone()).unwrap(), 0.3).unwrap();
        let c = find_modes(&model, &pts, None, &AscentConfig::default()).unwrap();
        (model, c)
    }

    #[test]
    fn indices_shrink_with_level() {
        let (model, c) = two_blob_model(3.0);
        let levels: Vec<LevelSpec> = [0.01, 0.05, 0.1, 0.2, 0.3].iter().map(|&l| LevelSpec::plain(l)).collect();
        let g = build_cluster_graph(&c, &model, &levels, 0.3, Style::default()).unwrap();
        assert_eq!(g.modes.len(), 2);
        let total: f64 = mode_index(&c.assignment, &model, 0.0).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for m in 0..2 {
            let r: Vec<f64> =
                g.levels.iter().map(|l| l.circles.iter().find(|c| c.mode == m).map_or(0.0, |c| c.r)).collect();
            assert!(r.windows(2).all(|w| w[1] <= w[0]));
        }
        for l in &g.levels {
            assert!(l.circles.iter().all(|c| c.r > 0.0));
            assert!(l.circles.iter().map(|c| c.r).sum::<f64>() <= 1.0);
        }
    }

    #[test]
    fn touching_basins_lose_their_edge_at_high_levels() {
        let (model, c) = two_blob_model(1.2);
        assert_eq!(c.modes.len(), 2);
        let g =
            build_cluster_graph(&c, &model, &[LevelSpec::plain(0.01), LevelSpec::plain(0.5)], 0.3, Style::default())
                .unwrap();
        assert_eq!(g.levels[0].edges.len(), 1);
        let e = &g.levels[0].edges[0];
        let r: Vec<f64> = g.levels[0].circles.iter().map(|c| c.r).collect();
        assert!((e.width - r.iter().sum::<f64>()).abs() < 1e-15);
        assert!(g.levels[1].edges.is_empty());
    }

    #[test]
    fn nothing_to_draw() {
        let (model, c) = two_blob_model(3.0);
        let r = build_cluster_graph(&c, &model, &[LevelSpec::plain(100.0)], 0.3, Style::default());
        assert!(matches!(r, Err(Error::NothingToDraw)));
        let r = build_cluster_graph(&c, &model, &[LevelSpec::plain(0.2), LevelSpec::plain(0.1)], 0.3, Style::default());
        assert!(r.is_err());
    }

    #[test]
    fn json_schema_fields() {
        let (model, c) = two_blob_model(3.0);
        let levels = confidence_levels(0.1, &[(0.1, 0.02)]).unwrap();
        let g = build_cluster_graph(&c, &model, &levels, 0.3, Style::default()).unwrap();
        let v = serde_json::to_value(&g).unwrap();
        assert!(v["modes"][0]["pos2d"].is_array());
        assert!(v["modes"][0]["id"].is_number());
        assert_eq!(v["levels"][0]["alpha"], 0.1);
        assert!(v["levels"][0]["circles"][0]["r"].is_number());
        assert!(v["levels"][0]["edges"].is_array());
    }
}
