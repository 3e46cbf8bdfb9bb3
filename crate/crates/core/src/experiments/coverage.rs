use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::presets::Scenario;
use super::true_levelset;
use crate::error::{Error, Result};
use crate::geometry::directed_max_dist;
use crate::inference::{
    run_bootstrap, BootstrapConfig, BootstrapPlan, EvalSet, LevelSetRoute, Method, DEFAULT_SCALED_FLOOR,
};
use crate::kernel_density::DensityModel;
use crate::seed::{derive_seed, stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub alphas: Vec<f64>,
    pub methods: Vec<Method>,
    pub trials: usize,
    #[serde(rename = "B")]
    pub replicates: usize,
    pub seed: u64,
    /// Per-axis resolution of the working grid for each trial's estimate.
    pub resolution: usize,
}

impl CoverageConfig {
    pub fn new(scenario: Scenario, n: usize, methods: Vec<Method>, alphas: Vec<f64>) -> Self {
        CoverageConfig { scenario, n, alphas, methods, trials: 200, replicates: 300, seed: 0, resolution: 128 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverageDiagnostics {
    /// Trials whose estimated level set was empty; each counts as a miss.
    pub empty_estimates: usize,
    /// Bootstrap replicates, over all trials, whose level set vanished.
    pub empty_replicates: usize,
    /// Replicates violating `A ⊂ B ⊕ Haus(A, B)`; zero in a correct run.
    pub inclusion_failures: usize,
    /// Trials where some estimated level-set vertex fell outside the band.
    pub band_exclusions: usize,
}

/// Coverage of one method on one scenario, per significance level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub scenario: Scenario,
    pub n: usize,
    pub alphas: Vec<f64>,
    pub method: Method,
    pub trials: usize,
    #[serde(rename = "B")]
    pub replicates: usize,
    pub hits: Vec<usize>,
    pub coverage: Vec<f64>,
    pub seed: u64,
    pub lambda: f64,
    pub bandwidth: f64,
    /// Vertices of the discretized true level set.
    pub true_set_vertices: usize,
    pub diagnostics: CoverageDiagnostics,
    /// Kept out of the JSON so reports stay byte-reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl CoverageReport {
    pub fn coverage_at(&self, alpha: f64) -> Option<f64> {
        self.alphas.iter().position(|&a| (a - alpha).abs() < 1e-12).map(|k| self.coverage[k])
    }
}

struct Trial {
    /// `[method][alpha]`
    hits: Vec<Vec<bool>>,
    empty: bool,
    empty_replicates: usize,
    inclusion_failures: usize,
    band_exclusion: Vec<bool>,
}

/// Runs the coverage study for every requested method on shared draws.
///
/// Trial `t` samples its data from stream `(seed, "trial", t)` and
/// bootstraps with seed `derive_seed(seed, "trial-bootstrap", t)`. A trial
/// is a hit for the Hausdorff method when every true-set vertex lies within
/// `ŵ` of the estimate, and for band methods when every true-set vertex is
/// inside the band.
pub fn run_coverage(cfg: &CoverageConfig) -> Result<Vec<CoverageReport>> {
    if cfg.trials == 0 || cfg.n == 0 {
        return Err(Error::invalid("coverage needs at least one trial and one point"));
    }
    if cfg.methods.is_empty() {
        return Err(Error::invalid("no inference method requested"));
    }
    let template = BootstrapConfig::new(cfg.replicates, cfg.seed, cfg.alphas.clone())?;
    let alphas = template.alphas.clone();
    let start = Instant::now();
    let level = cfg.scenario.level();
    let h = cfg.scenario.bandwidth();
    let mixture = cfg.scenario.mixture();
    let truth = true_levelset(&mixture.smoothed(h)?, level, None)?.vertices();

    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| -> Result<Trial> {
            let data = mixture.sample(cfg.n, &mut stream(cfg.seed, "trial", t as u64))?;
            let model = DensityModel::new(data, h)?;
            let grid = model.default_grid(3.0, cfg.resolution)?;
            let plan = BootstrapPlan {
                route: Some(LevelSetRoute::Grid(grid.clone())),
                eval: Some(EvalSet::grid(grid)),
                scaled_floor: DEFAULT_SCALED_FLOOR,
            };
            let boot = BootstrapConfig { seed: derive_seed(cfg.seed, "trial-bootstrap", t as u64), ..template.clone() };
            let out = match run_bootstrap(&model, level, &plan, &boot, &cfg.methods) {
                Err(Error::EmptyLevelSet { .. }) => {
                    return Ok(Trial {
                        hits: vec![vec![false; alphas.len()]; cfg.methods.len()],
                        empty: true,
                        empty_replicates: 0,
                        inclusion_failures: 0,
                        band_exclusion: vec![false; cfg.methods.len()],
                    })
                }
                other => other?,
            };
            let estimate = out.estimate.as_ref().expect("a route was given").vertices();
            let truth_density = model.eval_many(&truth)?;
            let gap = directed_max_dist(&truth, &estimate)?;
            let mut trial = Trial {
                hits: Vec::new(),
                empty: false,
                empty_replicates: 0,
                inclusion_failures: 0,
                band_exclusion: Vec::new(),
            };
            for m in &out.methods {
                let mut row = Vec::new();
                let mut excluded = false;
                for set in &m.sets {
                    let hit = match m.method {
                        Method::Hausdorff => gap <= set.threshold(),
                        _ => {
                            let mut all = true;
                            for (x, &p) in truth.iter().zip(&truth_density) {
                                if !set.contains_at(x, p, None)? {
                                    all = false;
                                    break;
                                }
                            }
                            all
                        }
                    };
                    row.push(hit);
                    excluded |= set.diagnostics.estimate_outside_band.unwrap_or(0) > 0;
                    if m.method == Method::Hausdorff {
                        trial.empty_replicates = set.diagnostics.empty_replicates;
                        trial.inclusion_failures = set.diagnostics.inclusion_failures.unwrap_or(0);
                    }
                }
                trial.hits.push(row);
                trial.band_exclusion.push(excluded);
            }
            Ok(trial)
        })
        .collect::<Result<_>>()?;

    let wall_time = start.elapsed();
    let diagnostics = |k: usize| CoverageDiagnostics {
        empty_estimates: trials.iter().filter(|t| t.empty).count(),
        empty_replicates: trials.iter().map(|t| t.empty_replicates).sum(),
        inclusion_failures: trials.iter().map(|t| t.inclusion_failures).sum(),
        band_exclusions: trials.iter().filter(|t| t.band_exclusion[k]).count(),
    };
    Ok(cfg
        .methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let hits: Vec<usize> = (0..alphas.len()).map(|a| trials.iter().filter(|t| t.hits[k][a]).count()).collect();
            let mut diag = diagnostics(k);
            if method != Method::Hausdorff {
                diag.empty_replicates = 0;
                diag.inclusion_failures = 0;
            }
            CoverageReport {
                scenario: cfg.scenario,
                n: cfg.n,
                alphas: alphas.clone(),
                method,
                trials: cfg.trials,
                replicates: cfg.replicates,
                coverage: hits.iter().map(|&h| h as f64 / cfg.trials as f64).collect(),
                hits,
                seed: cfg.seed,
                lambda: level,
                bandwidth: h,
                true_set_vertices: truth.len(),
                diagnostics: diag,
                wall_time,
            }
        })
        .collect())
}

/// Aligned text table with one row per method and one column per
/// confidence level, in the style of a coverage table.
pub fn format_table(reports: &[CoverageReport]) -> String {
    let mut out = String::new();
    let Some(first) = reports.first() else {
        return out;
    };
    let _ = writeln!(
        out,
        "scenario {}  n = {}  trials = {}  B = {}  lambda = {}  h = {}",
        first.scenario, first.n, first.trials, first.replicates, first.lambda, first.bandwidth
    );
    let _ = write!(out, "{:<12}", "method");
    for a in &first.alphas {
        let _ = write!(out, "{:>10}", format!("{:.0}%", 100.0 * (1.0 - a)));
    }
    out.push('\n');
    for r in reports {
        let _ = write!(out, "{:<12}", r.method.name());
        for c in &r.coverage {
            let _ = write!(out, "{c:>10.3}");
        }
        out.push('\n');
    }
    out
}
