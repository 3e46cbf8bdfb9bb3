//! Mean-shift mode clustering.
//!
//! Every start point climbs the estimated density with the Gaussian
//! mean-shift update until it stalls at a local mode; starts sharing a
//! destination form that mode's basin of attraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{connected_components_eps, distance_to_set, UpperLevelSetApprox};
use crate::kernel_density::DensityModel;
use crate::points::{check_dim, squared_distance, PointSet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AscentConfig {
    /// Stop once an update moves less than this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig { tol: 1e-7, max_iter: 500 }
    }
}

/// Outcome of one mean-shift trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Ascent {
    pub endpoint: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `p̂_h` at the start and after every update; non-decreasing up to roundoff.
    pub densities: Vec<f64>,
}

impl Ascent {
    pub fn final_density(&self) -> f64 {
        *self.densities.last().expect("a trajectory has its starting density")
    }
}

/// One mean-shift update from `x`, returning the next iterate and `p̂_h(x)`.
///
/// Weights are shifted by the nearest sample's exponent so far-away starts
/// do not underflow to `0/0`.
fn shift(model: &DensityModel, x: &[f64], next: &mut [f64]) -> f64 {
    let data = model.data();
    let c = model.inv_two_h2();
    let nearest = data.iter().map(|xi| squared_distance(x, xi)).fold(f64::INFINITY, f64::min);
    next.iter_mut().for_each(|v| *v = 0.0);
    let mut total = 0.0;
    for xi in data.iter() {
        let w = (-(squared_distance(x, xi) - nearest) * c).exp();
        total += w;
        for (acc, &v) in next.iter_mut().zip(xi) {
            *acc += w * v;
        }
    }
    next.iter_mut().for_each(|v| *v /= total);
    model.norm() * (-nearest * c).exp() * total
}

/// Gaussian mean-shift `x ← Σ Xᵢ ωᵢ(x) / Σ ωᵢ(x)` from `start`.
///
/// A trajectory that has not stalled within `max_iter` updates is returned
/// with `converged = false`.
pub fn mean_shift_ascent(model: &DensityModel, start: &[f64], cfg: &AscentConfig) -> Result<Ascent> {
    check_dim(model.dim(), start.len())?;
    if start.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mean-shift start".into()));
    }
    let mut x = start.to_vec();
    let mut next = vec![0.0; x.len()];
    let mut densities = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        densities.push(shift(model, &x, &mut next));
        iterations += 1;
        let step = squared_distance(&x, &next).sqrt();
        std::mem::swap(&mut x, &mut next);
        if step < cfg.tol {
            converged = true;
            break;
        }
    }
    densities.push(model.density_unchecked(&x));
    Ok(Ascent { endpoint: x, iterations, converged, densities })
}

/// Distinct local modes after merging nearby endpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub modes: Vec<Vec<f64>>,
    pub densities: Vec<f64>,
    pub merge_radius: f64,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn points(&self) -> Result<PointSet> {
        PointSet::from_rows(&self.modes)
    }
}

/// Destination mode of every start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinAssignment {
    pub labels: Vec<usize>,
    pub iterations: Vec<usize>,
    /// Starts that did not converge are labeled with the nearest mode.
    pub converged: Vec<bool>,
    pub n_modes: usize,
}

impl BasinAssignment {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of starts assigned to each mode.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_modes];
        self.labels.iter().for_each(|&l| sizes[l] += 1);
        sizes
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeClustering {
    pub modes: ModeSet,
    pub assignment: BasinAssignment,
}

/// Runs mean shift from every start and merges endpoints closer than
/// `merge_radius` (single linkage). Defaults to `h/4`.
///
/// A merged mode is represented by its highest-density endpoint. Modes are
/// numbered in order of their first converged start, so numbering follows
/// the start sequence.
pub fn find_modes(
    model: &DensityModel,
    starts: &PointSet,
    merge_radius: Option<f64>,
    cfg: &AscentConfig,
) -> Result<ModeClustering> {
    check_dim(model.dim(), starts.dim())?;
    if starts.is_empty() {
        return Err(Error::invalid("mode finding needs at least one start"));
    }
    let radius = merge_radius.unwrap_or(model.bandwidth() / 4.0);
    let ascents: Vec<Ascent> = starts
        .coords()
        .par_chunks_exact(starts.dim())
        .map(|s| mean_shift_ascent(model, s, cfg))
        .collect::<Result<_>>()?;

    let converged_idx: Vec<usize> = (0..ascents.len()).filter(|&i| ascents[i].converged).collect();
    if converged_idx.is_empty() {
        return Err(Error::invalid(format!("no mean-shift trajectory converged within {} iterations", cfg.max_iter)));
    }
    let mut endpoints = PointSet::empty(model.dim());
    for &i in &converged_idx {
        endpoints.push(&ascents[i].endpoint)?;
    }
    let groups = connected_components_eps(&endpoints, radius)?;
    let n_modes = groups.iter().max().map_or(0, |m| m + 1);
    let mut best: Vec<Option<usize>> = vec![None; n_modes];
    for (k, &g) in groups.iter().enumerate() {
        let i = converged_idx[k];
        let better = match best[g] {
            None => true,
            Some(j) => ascents[i].final_density() > ascents[j].final_density(),
        };
        if better {
            best[g] = Some(i);
        }
    }
    let reps: Vec<usize> = best.into_iter().map(|b| b.expect("every group has a member")).collect();
    let modes = ModeSet {
        modes: reps.iter().map(|&i| ascents[i].endpoint.clone()).collect(),
        densities: reps.iter().map(|&i| ascents[i].final_density()).collect(),
        merge_radius: radius,
    };
    let mode_points = modes.points()?;

    let mut labels = vec![0; ascents.len()];
    for (k, &i) in converged_idx.iter().enumerate() {
        labels[i] = groups[k];
    }
    for (i, a) in ascents.iter().enumerate().filter(|(_, a)| !a.converged) {
        labels[i] = nearest_index(&a.endpoint, &mode_points);
    }
    let assignment = BasinAssignment {
        labels,
        iterations: ascents.iter().map(|a| a.iterations).collect(),
        converged: ascents.iter().map(|a| a.converged).collect(),
        n_modes,
    };
    Ok(ModeClustering { modes, assignment })
}

fn nearest_index(x: &[f64], set: &PointSet) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (j, p) in set.iter().enumerate() {
        let d = squared_distance(x, p);
        if d < best.0 {
            best = (d, j);
        }
    }
    best.1
}

/// Two modes whose basins touch within the upper level set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinEdge {
    pub a: usize,
    pub b: usize,
    /// Shortest distance between high-density members of the two basins.
    pub gap: f64,
}

/// Pairs of modes whose high-density members fall in one ε-connected
/// component and come within `eps` of each other.
///
/// `assignment` labels the points of `reference`, which is also the point
/// set `highpoints` indexes into. Non-converged points are ignored. Edges
/// are returned with `a < b`, sorted.
pub fn basin_adjacency(
    assignment: &BasinAssignment,
    reference: &PointSet,
    highpoints: &UpperLevelSetApprox,
    eps: f64,
) -> Result<Vec<BasinEdge>> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::invalid(format!("adjacency radius must be positive, got {eps}")));
    }
    if assignment.len() != reference.len() {
        return Err(Error::invalid("the basin assignment must label every reference point"));
    }
    let members: Vec<(usize, usize)> = highpoints
        .members
        .iter()
        .zip(&highpoints.labels)
        .filter(|(&i, _)| assignment.converged[i])
        .map(|(&i, &c)| (i, c))
        .collect();
    let k = assignment.n_modes;
    let mut gaps = vec![f64::INFINITY; k * k];
    let eps2 = eps * eps;
    for (x, &(i, ci)) in members.iter().enumerate() {
        let li = assignment.labels[i];
        for &(j, cj) in &members[x + 1..] {
            let lj = assignment.labels[j];
            if li == lj || ci != cj {
                continue;
            }
            let d2 = squared_distance(reference.point(i), reference.point(j));
            if d2 <= eps2 {
                let (a, b) = (li.min(lj), li.max(lj));
                gaps[a * k + b] = gaps[a * k + b].min(d2);
            }
        }
    }
    let mut edges = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            if gaps[a * k + b].is_finite() {
                edges.push(BasinEdge { a, b, gap: gaps[a * k + b].sqrt() });
            }
        }
    }
    Ok(edges)
}

/// Distance from `x` to the closest mode.
pub fn distance_to_modes(x: &[f64], modes: &ModeSet) -> Result<f64> {
    Ok(distance_to_set(x, &modes.points()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SampleSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn blobs(centers: &[[f64; 2]], per: usize, sd: f64, seed: u64) -> (PointSet, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sd).unwrap();
        let mut coords = Vec::new();
        let mut truth = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..per {
                coords.push(center[0] + noise.sample(&mut rng));
                coords.push(center[1] + noise.sample(&mut rng));
                truth.push(c);
            }
        }
        (PointSet::new(2, coords).unwrap(), truth)
    }

    fn model_of(points: PointSet, h: f64) -> DensityModel {
        DensityModel::new(SampleSet::new(points).unwrap(), h).unwrap()
    }

    #[test]
    fn exact_mode_is_a_fixed_point() {
        let m = model_of(PointSet::from_rows(&[[1.0, 2.0]]).unwrap(), 0.5);
        let a = mean_shift_ascent(&m, &[1.0, 2.0], &AscentConfig::default()).unwrap();
        assert!(a.converged);
        assert_eq!(a.iterations, 1);
        assert_eq!(a.endpoint, vec![1.0, 2.0]);
    }

    #[test]
    fn wide_bandwidth_lands_near_the_mean() {
        let (pts, _) = blobs(&[[0.5, -1.0]], 200, 0.3, 1);
        let mean: Vec<f64> = (0..2).map(|k| pts.iter().map(|p| p[k]).sum::<f64>() / 200.0).collect();
        let h = 1.0;
        let m = model_of(pts, h);
        let a = mean_shift_ascent(&m, &[3.0, 3.0], &AscentConfig::default()).unwrap();
        assert!(a.converged);
        // the fixed point solves x = Σ Xᵢ ωᵢ(x) / Σ ωᵢ(x); check it directly too
        let mut next = vec![0.0; 2];
        shift(&m, &a.endpoint, &mut next);
        assert!(squared_distance(&next, &a.endpoint).sqrt() < 1e-7);
        assert!(squared_distance(&a.endpoint, &mean).sqrt() < h / 10.0);
    }

    #[test]
    fn density_never_decreases() {
        let (pts, _) = blobs(&[[0.0, 0.0], [1.0, 0.3]], 80, 0.35, 2);
        let m = model_of(pts, 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = Normal::new(0.5, 1.0).unwrap();
        for _ in 0..50 {
            let s = [u.sample(&mut rng), u.sample(&mut rng)];
            let a = mean_shift_ascent(&m, &s, &AscentConfig::default()).unwrap();
            for w in a.densities.windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
            // tracked densities agree with direct evaluation at the endpoint
            assert!((a.final_density() - m.eval(&a.endpoint).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn far_start_does_not_underflow() {
        let m = model_of(PointSet::from_rows(&[[0.0], [1.0]]).unwrap(), 0.1);
        let a = mean_shift_ascent(&m, &[1e4], &AscentConfig::default()).unwrap();
        assert!(a.endpoint[0].is_finite());
        assert!((a.endpoint[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn separated_clusters_give_their_partition() {
        let (pts, truth) = blobs(&[[0.0, 0.0], [6.0, 0.0]], 60, 0.4, 4);
        let m = model_of(pts.clone(), 0.4);
        let out = find_modes(&m, &pts, None, &AscentConfig::default()).unwrap();
        assert_eq!(out.modes.len(), 2);
        assert!(out.assignment.converged.iter().all(|&c| c));
        // the oracle: assign each point to the nearer true center
        for (i, &t) in truth.iter().enumerate() {
            assert_eq!(out.assignment.labels[i], t);
        }
        for (mode, &d) in out.modes.modes.iter().zip(&out.modes.densities) {
            let g = m.gradient(mode).unwrap();
            assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-5 * d / m.bandwidth());
        }
    }

    #[test]
    fn infinite_merge_radius_gives_one_mode() {
        let (pts, _) = blobs(&[[0.0, 0.0], [6.0, 0.0]], 30, 0.4, 5);
        let m = model_of(pts.clone(), 0.4);
        let out = find_modes(&m, &pts, Some(f64::INFINITY), &AscentConfig::default()).unwrap();
        assert_eq!(out.modes.len(), 1);
        assert!(out.assignment.labels.iter().all(|&l| l == 0));
        let best = out.modes.densities[0];
        let tracked: Vec<f64> = pts.iter().map(|p| m.eval(p).unwrap()).collect();
        assert!(best >= tracked.iter().copied().fold(0.0, f64::max));
    }

    #[test]
    fn mode_count_invariant_to_order() {
        let (pts, _) = blobs(&[[0.0, 0.0], [2.0, 0.0], [1.0, 1.7]], 40, 0.35, 6);
        let m = model_of(pts.clone(), 0.3);
        let a = find_modes(&m, &pts, None, &AscentConfig::default()).unwrap();
        let rev: Vec<usize> = (0..pts.len()).rev().collect();
        let shuffled = pts.select(&rev);
        let m2 = model_of(shuffled.clone(), 0.3);
        let b = find_modes(&m2, &shuffled, None, &AscentConfig::default()).unwrap();
        assert_eq!(a.modes.len(), b.modes.len());
        for mode in &a.modes.modes {
            assert!(distance_to_modes(mode, &b.modes).unwrap() < 1e-5);
        }
    }

    #[test]
    fn modes_are_separated_by_the_merge_radius() {
        let (pts, _) = blobs(&[[0.0, 0.0], [1.2, 0.0]], 50, 0.5, 7);
        let m = model_of(pts.clone(), 0.2);
        let out = find_modes(&m, &pts, None, &AscentConfig::default()).unwrap();
        let p = out.modes.points().unwrap();
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                assert!(squared_distance(p.point(i), p.point(j)).sqrt() > out.modes.merge_radius);
            }
        }
    }

    #[test]
    fn non_converged_starts_are_flagged() {
        let (pts, _) = blobs(&[[0.0, 0.0]], 30, 0.5, 8);
        let m = model_of(pts.clone(), 0.3);
        let cfg = AscentConfig { tol: 1e-7, max_iter: 3 };
        let a = mean_shift_ascent(&m, &[40.0, 40.0], &cfg).unwrap();
        assert!(!a.converged);
        assert_eq!(a.iterations, 3);
        // the mode itself converges at once, the far start does not
        let center = find_modes(&m, &pts, None, &AscentConfig::default()).unwrap().modes.modes[0].clone();
        let starts = PointSet::from_rows(&[center, vec![40.0, 40.0]]).unwrap();
        let out = find_modes(&m, &starts, None, &cfg).unwrap();
        assert_eq!(out.assignment.converged, vec![true, false]);
        assert_eq!(out.assignment.labels, vec![0, 0]);
    }

    #[test]
    fn dumbbell_adjacency_follows_the_bridge() {
        // two blobs joined by a sparse bridge of evenly spaced points
        let (mut pts, _) = blobs(&[[0.0, 0.0], [4.0, 0.0]], 150, 0.3, 9);
        for k in 1..40 {
            pts.push(&[4.0 * k as f64 / 40.0, 0.0]).unwrap();
        }
        let h = 0.3;
        let m = model_of(pts.clone(), h);
        let out = find_modes(&m, &pts, None, &AscentConfig::default()).unwrap();
        assert_eq!(out.modes.len(), 2);
        let dens = m.eval_many(&pts).unwrap();
        // the middle of the bridge, x in [1, 3]
        let middle = &dens[309..330];
        let bridge_max = middle.iter().copied().fold(0.0, f64::max);
        let bridge_min = middle.iter().copied().fold(f64::INFINITY, f64::min);

        // trajectories next to the saddle may stall unconverged and drop out,
        // so link at a radius that spans a few bridge spacings
        let eps = 0.5;
        let low = UpperLevelSetApprox::from_densities(&pts, &dens, 0.5 * bridge_min, eps).unwrap();
        let edges = basin_adjacency(&out.assignment, &pts, &low, eps).unwrap();
        assert_eq!(edges.len(), 1);
        // oracle: explicit minimum over cross-basin pairs of members
        let mut best = f64::INFINITY;
        for &i in &low.members {
            for &j in &low.members {
                let both = out.assignment.converged[i] && out.assignment.converged[j];
                if both && out.assignment.labels[i] != out.assignment.labels[j] {
                    best = best.min(squared_distance(pts.point(i), pts.point(j)).sqrt());
                }
            }
        }
        assert!((edges[0].gap - best).abs() < 1e-15);

        let high = UpperLevelSetApprox::from_densities(&pts, &dens, 1.5 * bridge_max, eps).unwrap();
        let basins: std::collections::BTreeSet<usize> =
            high.members.iter().map(|&i| out.assignment.labels[i]).collect();
        assert_eq!(basins.len(), 2);
        assert!(basin_adjacency(&out.assignment, &pts, &high, eps).unwrap().is_empty());
    }

    #[test]
    fn single_basin_has_no_edges() {
        let (pts, _) = blobs(&[[0.0, 0.0]], 40, 0.3, 10);
        let m = model_of(pts.clone(), 0.5);
        let out = find_modes(&m, &pts, None, &AscentConfig::default()).unwrap();
        let dens = m.eval_many(&pts).unwrap();
        let up = UpperLevelSetApprox::from_densities(&pts, &dens, 0.0, 0.5).unwrap();
        assert!(basin_adjacency(&out.assignment, &pts, &up, 0.5).unwrap().is_empty());
    }

    #[test]
    fn json_round_trip() {
        let (pts, _) = blobs(&[[0.0, 0.0], [3.0, 0.0]], 20, 0.3, 11);
        let m = model_of(pts.clone(), 0.3);
        let out = find_modes(&m, &pts, None, &AscentConfig::default()).unwrap();
        let text = serde_json::to_string(&out).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["assignment"]["labels"].as_array().unwrap().len(), 40);
        assert_eq!(v["modes"]["modes"].as_array().unwrap().len(), 2);
        let back: ModeClustering = serde_json::from_str(&text).unwrap();
        assert_eq!(back, out);
    }
}
