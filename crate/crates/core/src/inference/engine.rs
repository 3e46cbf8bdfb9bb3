use rayon::prelude::*;

use super::bootstrap::{empirical_quantile, resample_counts};
use super::{BootstrapConfig, ConfidenceSet, Diagnostics, Method};
use crate::error::{Error, Result};
use crate::geometry::{distance_to_set, extract_contour_2d, filter_points, hausdorff, LevelSetApprox};
use crate::kernel_density::{DensityModel, GridSpec, GridValues, KernelBasis};
use crate::points::{check_dim, PointSet};
use crate::seed::stream;

/// Points with `p̂_h` below this fraction of the maximum are left out of the
/// scaled supremum.
pub const DEFAULT_SCALED_FLOOR: f64 = 1e-6;

const DEFAULT_RESOLUTION_2D: usize = 128;
const DEFAULT_RESOLUTION_1D: usize = 512;
const COARSE_RESOLUTION: usize = 5;
const COARSE_NODE_LIMIT: usize = 20_000;
const GRID_PAD_BANDWIDTHS: f64 = 3.0;

/// How level sets are discretized for the Hausdorff loss.
#[derive(Clone, Debug, PartialEq)]
pub enum LevelSetRoute {
    /// Marching-squares contour on a 2-D grid.
    Grid(GridSpec),
    /// Candidates with `|p̂ − λ| ≤ tol`, for any dimension.
    Points { candidates: PointSet, tol: f64 },
}

/// Default route: a 128×128 grid over the data box padded by `3h` when
/// `d = 2`, otherwise the data points with tolerance `λ/10`.
pub fn default_levelset_route(model: &DensityModel, level: f64) -> Result<LevelSetRoute> {
    if model.dim() == 2 {
        Ok(LevelSetRoute::Grid(model.default_grid(GRID_PAD_BANDWIDTHS, DEFAULT_RESOLUTION_2D)?))
    } else {
        Ok(LevelSetRoute::Points { candidates: model.data().points().clone(), tol: 0.1 * level.abs() })
    }
}

/// The finite set over which supremum losses are taken.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalSet {
    pub grid: Option<GridSpec>,
    pub points: Option<PointSet>,
}

impl EvalSet {
    pub fn grid(grid: GridSpec) -> Self {
        EvalSet { grid: Some(grid), points: None }
    }

    /// Grid over the padded data box for `d ≤ 2`; otherwise the data points
    /// plus a coarse grid when one fits.
    pub fn default_for(model: &DensityModel) -> Result<Self> {
        match model.dim() {
            1 => Ok(EvalSet::grid(model.default_grid(GRID_PAD_BANDWIDTHS, DEFAULT_RESOLUTION_1D)?)),
            2 => Ok(EvalSet::grid(model.default_grid(GRID_PAD_BANDWIDTHS, DEFAULT_RESOLUTION_2D)?)),
            d => {
                let coarse = COARSE_RESOLUTION.checked_pow(d as u32).filter(|&c| c <= COARSE_NODE_LIMIT);
                let grid = match coarse {
                    Some(_) => Some(model.default_grid(GRID_PAD_BANDWIDTHS, COARSE_RESOLUTION)?),
                    None => None,
                };
                Ok(EvalSet { grid, points: Some(model.data().points().clone()) })
            }
        }
    }

    pub fn len(&self) -> usize {
        self.grid.as_ref().map_or(0, GridSpec::node_count) + self.points.as_ref().map_or(0, PointSet::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if let Some(g) = &self.grid {
            let res: Vec<String> = g.resolution().iter().map(usize::to_string).collect();
            parts.push(format!("grid {} over {:?}..{:?}", res.join("x"), g.lower(), g.upper()));
        }
        if let Some(p) = &self.points {
            parts.push(format!("{} points", p.len()));
        }
        parts.join(" + ")
    }
}

/// Everything a combined bootstrap run needs beyond the model and level.
#[derive(Clone, Debug)]
pub struct BootstrapPlan {
    pub route: Option<LevelSetRoute>,
    pub eval: Option<EvalSet>,
    pub scaled_floor: f64,
}

impl BootstrapPlan {
    pub fn default_for(model: &DensityModel, level: f64) -> Result<Self> {
        Ok(BootstrapPlan {
            route: Some(default_levelset_route(model, level)?),
            eval: Some(EvalSet::default_for(model)?),
            scaled_floor: DEFAULT_SCALED_FLOOR,
        })
    }
}

/// Replicate losses and the resulting confidence sets (one per α) of one method.
#[derive(Clone, Debug)]
pub struct MethodOutcome {
    pub method: Method,
    pub losses: Vec<f64>,
    pub sets: Vec<ConfidenceSet>,
}

#[derive(Clone, Debug)]
pub struct BootstrapOutcome {
    /// The estimated level set `D̂_h`, present when the Hausdorff loss ran.
    pub estimate: Option<LevelSetApprox>,
    pub methods: Vec<MethodOutcome>,
}

impl BootstrapOutcome {
    pub fn get(&self, method: Method) -> Option<&MethodOutcome> {
        self.methods.iter().find(|m| m.method == method)
    }
}

#[derive(Clone, Debug)]
pub struct HausdorffOutcome {
    pub estimate: LevelSetApprox,
    pub losses: Vec<f64>,
    pub sets: Vec<ConfidenceSet>,
}

#[derive(Clone, Debug)]
pub struct BandOutcome {
    pub losses: Vec<f64>,
    pub sets: Vec<ConfidenceSet>,
}

/// Hausdorff-loss confidence sets `D̂_h ⊕ ŵ_{1−α}`.
///
/// Each replicate refits the KDE on a resample with the same bandwidth,
/// extracts `D̂*` and records `W* = Haus(D̂*, D̂_h)`; a vanished `D̂*`
/// records `+∞`.
pub fn method1_hausdorff_ci(
    model: &DensityModel,
    level: f64,
    route: &LevelSetRoute,
    boot: &BootstrapConfig,
) -> Result<HausdorffOutcome> {
    let plan = BootstrapPlan { route: Some(route.clone()), eval: None, scaled_floor: DEFAULT_SCALED_FLOOR };
    let mut out = run_bootstrap(model, level, &plan, boot, &[Method::Hausdorff])?;
    let m = out.methods.remove(0);
    Ok(HausdorffOutcome {
        estimate: out.estimate.expect("hausdorff run keeps its estimate"),
        losses: m.losses,
        sets: m.sets,
    })
}

/// Supremum-loss bands `|p̂_h − λ| ≤ m̂_{1−α}`.
pub fn method2_sup_ci(model: &DensityModel, level: f64, eval: &EvalSet, boot: &BootstrapConfig) -> Result<BandOutcome> {
    let plan = BootstrapPlan { route: None, eval: Some(eval.clone()), scaled_floor: DEFAULT_SCALED_FLOOR };
    let mut out = run_bootstrap(model, level, &plan, boot, &[Method::Sup])?;
    let m = out.methods.remove(0);
    Ok(BandOutcome { losses: m.losses, sets: m.sets })
}

/// Variance-stabilized bands `|p̂_h − λ| ≤ v̂_{1−α}·√p̂_h`. Points below
/// `floor · max p̂_h` are excluded from the supremum.
pub fn method2_scaled_ci(
    model: &DensityModel,
    level: f64,
    eval: &EvalSet,
    floor: f64,
    boot: &BootstrapConfig,
) -> Result<BandOutcome> {
    let plan = BootstrapPlan { route: None, eval: Some(eval.clone()), scaled_floor: floor };
    let mut out = run_bootstrap(model, level, &plan, boot, &[Method::Scaled])?;
    let m = out.methods.remove(0);
    Ok(BandOutcome { losses: m.losses, sets: m.sets })
}

struct Route {
    basis: KernelBasis,
    grid: Option<GridSpec>,
    candidates: Option<(PointSet, f64)>,
}

impl Route {
    fn build(model: &DensityModel, route: &LevelSetRoute) -> Result<Self> {
        match route {
            LevelSetRoute::Grid(g) => {
                if g.dim() != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: g.dim() });
                }
                check_dim(model.dim(), 2)?;
                Ok(Route { basis: KernelBasis::for_grid(model, g)?, grid: Some(g.clone()), candidates: None })
            }
            LevelSetRoute::Points { candidates, tol } => {
                if tol.is_nan() || *tol < 0.0 {
                    return Err(Error::invalid(format!("tolerance must be non-negative, got {tol}")));
                }
                Ok(Route {
                    basis: KernelBasis::for_points(model, candidates)?,
                    grid: None,
                    candidates: Some((candidates.clone(), *tol)),
                })
            }
        }
    }

    fn extract(&self, values: Vec<f64>, level: f64) -> Result<LevelSetApprox> {
        match (&self.grid, &self.candidates) {
            (Some(g), _) => extract_contour_2d(&GridValues::new(g.clone(), values), level),
            (None, Some((c, tol))) => filter_points(c, &values, level, *tol),
            (None, None) => unreachable!("a route has a grid or candidates"),
        }
    }
}

struct Replicate {
    hausdorff: Option<f64>,
    empty: bool,
    inclusion_failure: bool,
    sup: Option<f64>,
    scaled: Option<f64>,
}

/// Runs one set of bootstrap replicates and evaluates every requested loss
/// on the same resamples.
///
/// Replicate `b` draws its resample from the stream `(seed, "bootstrap", b)`,
/// so results do not depend on scheduling.
pub fn run_bootstrap(
    model: &DensityModel,
    level: f64,
    plan: &BootstrapPlan,
    boot: &BootstrapConfig,
    methods: &[Method],
) -> Result<BootstrapOutcome> {
    boot.validate()?;
    if !level.is_finite() {
        return Err(Error::NonFinite(format!("level {level}")));
    }
    if methods.is_empty() {
        return Err(Error::invalid("no inference method requested"));
    }
    let want = |m: Method| methods.contains(&m);
    let want_band = want(Method::Sup) || want(Method::Scaled);

    let want_hausdorff = want(Method::Hausdorff);
    let route = match (&plan.route, want_hausdorff) {
        (Some(r), _) => Some(Route::build(model, r)?),
        (None, true) => return Err(Error::invalid("the Hausdorff loss needs a level-set route")),
        (None, false) => None,
    };
    let mut estimate_densities = Vec::new();
    let (estimate, estimate_points, route_center) = match &route {
        Some(r) => {
            let center = r.basis.evaluate(None);
            let mut est = r.extract(center.clone(), level)?;
            if est.is_empty() {
                return Err(Error::EmptyLevelSet { level });
            }
            let pts = est.vertices();
            estimate_densities = model.eval_many(&pts)?;
            if r.grid.is_some() {
                est.tolerance = estimate_densities.iter().map(|p| (p - level).abs()).fold(0.0, f64::max);
            }
            (Some(est), Some(pts), Some(center))
        }
        None => (None, None, None),
    };

    // band evaluation set; reuse the contour grid when it is the same grid
    let mut band_grid_basis: Option<KernelBasis> = None;
    let mut reuse_route_grid = false;
    let mut band_points_basis: Option<KernelBasis> = None;
    let mut band_center: Vec<f64> = Vec::new();
    let mut eval_desc = None;
    let mut eval_count = None;
    if want_band {
        let eval = plan.eval.as_ref().ok_or_else(|| Error::invalid("band methods need an evaluation set"))?;
        if eval.is_empty() {
            return Err(Error::invalid("the evaluation set is empty"));
        }
        if let Some(g) = &eval.grid {
            match (&route, &route_center) {
                (Some(r), Some(center)) if r.grid.as_ref() == Some(g) => {
                    reuse_route_grid = true;
                    band_center.extend_from_slice(center);
                }
                _ => {
                    let b = KernelBasis::for_grid(model, g)?;
                    band_center.extend(b.evaluate(None));
                    band_grid_basis = Some(b);
                }
            }
        }
        if let Some(p) = &eval.points {
            let b = KernelBasis::for_points(model, p)?;
            band_center.extend(b.evaluate(None));
            band_points_basis = Some(b);
        }
        eval_desc = Some(eval.describe());
        eval_count = Some(band_center.len());
    }
    let floor_value = if want(Method::Scaled) {
        if !(plan.scaled_floor >= 0.0) {
            return Err(Error::invalid("the scaled floor must be non-negative"));
        }
        let max = band_center.iter().copied().fold(0.0, f64::max);
        let floor = plan.scaled_floor * max;
        if !band_center.iter().any(|&p| p > 0.0 && p >= floor) {
            return Err(Error::invalid("every evaluation point lies below the scaled-loss floor"));
        }
        Some(floor)
    } else {
        None
    };

    let n = model.data().len();
    let replicates: Vec<Replicate> = (0..boot.replicates)
        .into_par_iter()
        .map(|b| -> Result<Replicate> {
            let counts = resample_counts(n, &mut stream(boot.seed, "bootstrap", b as u64));
            let mut rep =
                Replicate { hausdorff: None, empty: false, inclusion_failure: false, sup: None, scaled: None };
            let route_values = match &route {
                Some(r) if want_hausdorff || reuse_route_grid => Some(r.basis.evaluate(Some(&counts))),
                _ => None,
            };
            if let (true, Some(r), Some(values), Some(est)) = (want_hausdorff, &route, &route_values, &estimate_points)
            {
                let star = r.extract(values.clone(), level)?.vertices();
                if star.is_empty() {
                    rep.hausdorff = Some(f64::INFINITY);
                    rep.empty = true;
                } else {
                    let w = hausdorff(&star, est)?;
                    // A ⊂ B ⊕ Haus(A, B), checked both ways with a plain nearest-point scan
                    rep.inclusion_failure = star.iter().any(|a| distance_to_set(a, est) > w)
                        || est.iter().any(|e| distance_to_set(e, &star) > w);
                    rep.hausdorff = Some(w);
                }
            }
            if want_band {
                let mut star: Vec<f64> = Vec::with_capacity(band_center.len());
                if reuse_route_grid {
                    star.extend_from_slice(route_values.as_ref().expect("route grid evaluated"));
                }
                if let Some(b) = &band_grid_basis {
                    star.extend(b.evaluate(Some(&counts)));
                }
                if let Some(b) = &band_points_basis {
                    star.extend(b.evaluate(Some(&counts)));
                }
                let mut sup: f64 = 0.0;
                let mut scaled: f64 = 0.0;
                for (&p_star, &p_hat) in star.iter().zip(&band_center) {
                    let gap = (p_star - p_hat).abs();
                    sup = sup.max(gap);
                    if let Some(floor) = floor_value {
                        if p_hat > 0.0 && p_hat >= floor {
                            scaled = scaled.max(gap / p_hat.sqrt());
                        }
                    }
                }
                rep.sup = Some(sup);
                rep.scaled = floor_value.map(|_| scaled);
            }
            Ok(rep)
        })
        .collect::<Result<_>>()?;

    let empty_replicates = replicates.iter().filter(|r| r.empty).count();
    let inclusion_failures = replicates.iter().filter(|r| r.inclusion_failure).count();
    let mut outcomes = Vec::new();
    for &method in methods {
        let losses: Vec<f64> = replicates
            .iter()
            .map(|r| match method {
                Method::Hausdorff => r.hausdorff,
                Method::Sup => r.sup,
                Method::Scaled => r.scaled,
            })
            .map(|v| v.expect("requested loss computed"))
            .collect();
        let diagnostics = match method {
            Method::Hausdorff => {
                Diagnostics { empty_replicates, inclusion_failures: Some(inclusion_failures), ..Diagnostics::default() }
            }
            Method::Sup => {
                Diagnostics { eval_set: eval_desc.clone(), eval_points: eval_count, ..Diagnostics::default() }
            }
            Method::Scaled => Diagnostics {
                eval_set: eval_desc.clone(),
                eval_points: eval_count,
                floor: floor_value,
                ..Diagnostics::default()
            },
        };
        let sets = boot
            .alphas
            .iter()
            .map(|&alpha| -> Result<ConfidenceSet> {
                let q = empirical_quantile(&losses, 1.0 - alpha)?;
                let (radius, half_width) = match method {
                    Method::Hausdorff => (Some(q), None),
                    _ => (None, Some(q)),
                };
                let mut set = ConfidenceSet {
                    method,
                    alpha,
                    lambda: level,
                    radius,
                    half_width,
                    bandwidth: model.bandwidth(),
                    replicates: boot.replicates,
                    seed: boot.seed,
                    diagnostics: diagnostics.clone(),
                };
                if method != Method::Hausdorff && estimate.is_some() {
                    // the estimated level set must lie inside its own band
                    let pts = estimate_points.as_ref().expect("estimate has vertices");
                    let mut outside = 0;
                    for (x, &p) in pts.iter().zip(&estimate_densities) {
                        if !set.contains_at(x, p, None)? {
                            outside += 1;
                        }
                    }
                    set.diagnostics.estimate_outside_band = Some(outside);
                }
                Ok(set)
            })
            .collect::<Result<_>>()?;
        outcomes.push(MethodOutcome { method, losses, sets });
    }
    Ok(BootstrapOutcome { estimate, methods: outcomes })
}
