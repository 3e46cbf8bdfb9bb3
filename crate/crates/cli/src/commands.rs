use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use levelci::experiments::{
    five_clusters_tube, format_table, load_csv, old_faithful_like, run_coverage, true_levelset, with_noise_dims,
    CoverageConfig, Scale, Scenario,
};
use levelci::geometry::{
    connected_components_eps, contour_levelset, extract_levelset_points, LevelSetApprox, UpperLevelSetApprox,
};
use levelci::inference::{
    decide, method2_sup_ci, run_bootstrap, BootstrapConfig, BootstrapPlan, ConfidenceSet, EvalSet, LevelSetRoute,
    Method, Region, DEFAULT_SCALED_FLOOR,
};
use levelci::mode_clustering::{find_modes, mean_shift_ascent, AscentConfig};
use levelci::seed::stream;
use levelci::visualization::{
    build_cluster_graph, confidence_levels, render_levelset_svg, render_svg, LevelSetPlot, LevelSpec, RegionRaster,
    Style,
};
use levelci::{DensityModel, Error, GridSpec, PointSet, Result, SampleSet};

use crate::config::{config_error, Bandwidth, Level, RunConfig};

const GRID_PAD_BANDWIDTHS: f64 = 3.0;
const DATA_PRESETS: [&str; 6] =
    ["three-gmm", "four-mixture", "old-faithful", "five-clusters-tube", "tube-6d", "tube-10d"];

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    seed: u64,
    config: &'a RunConfig,
    result: T,
}

fn write_json<T: Serialize>(cfg: &RunConfig, result: T) -> Result<()> {
    let env = Envelope { version: env!("CARGO_PKG_VERSION"), seed: cfg.seed, config: cfg, result };
    let mut text = serde_json::to_string_pretty(&env)?;
    text.push('\n');
    match &cfg.out_json {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn write_svg(cfg: &RunConfig, svg: impl FnOnce() -> Result<String>) -> Result<()> {
    if let Some(p) = &cfg.out_svg {
        std::fs::write(Path::new(p), svg()?)?;
    }
    Ok(())
}

/// Reads `--input` or draws `--scenario` data from the `data` stream of the seed.
fn load_data(cfg: &RunConfig) -> Result<SampleSet> {
    let samples = match (&cfg.input, &cfg.scenario) {
        (Some(path), _) => {
            return match load_csv(Path::new(path), cfg.delimiter_byte(), cfg.scale) {
                Ok(loaded) => Ok(loaded.samples),
                Err(Error::Io(e)) => Err(Error::Io(std::io::Error::new(e.kind(), format!("{path}: {e}")))),
                Err(e) => Err(e),
            }
        }
        (None, Some(name)) => {
            let rng = &mut stream(cfg.seed, "data", 0);
            match name.as_str() {
                "old-faithful" => old_faithful_like(cfg.n.unwrap_or(272), rng)?,
                "five-clusters-tube" | "tube-6d" | "tube-10d" => {
                    let per = cfg.n.unwrap_or(1000) / 5;
                    let base = five_clusters_tube(per.max(1), per / 4, rng)?;
                    match name.as_str() {
                        "tube-6d" => with_noise_dims(&base, 3, 0.3, rng)?,
                        "tube-10d" => with_noise_dims(&base, 7, 0.3, rng)?,
                        _ => base,
                    }
                }
                other => match other.parse::<Scenario>() {
                    Ok(s) => s.mixture().sample(cfg.n.unwrap_or(1000), rng)?,
                    Err(_) => {
                        return Err(config_error(format!(
                            "unknown scenario {other:?}; available: {}",
                            DATA_PRESETS.join(", ")
                        )))
                    }
                },
            }
        }
        (None, None) => unreachable!("resolution requires a data source"),
    };
    match cfg.scale {
        Scale::None => Ok(samples),
        Scale::Standardize => {
            let (mean, sd) = samples.axis_moments();
            if sd.iter().any(|s| !(*s > 0.0)) {
                return Err(Error::Degenerate("cannot standardize an axis with zero spread".into()));
            }
            let d = samples.dim();
            let coords = samples
                .coords()
                .chunks_exact(d)
                .flat_map(|p| (0..d).map(|i| (p[i] - mean[i]) / sd[i]).collect::<Vec<_>>())
                .collect();
            SampleSet::new(PointSet::new(d, coords)?)
        }
    }
}

fn fit(cfg: &RunConfig) -> Result<DensityModel> {
    let data = load_data(cfg)?;
    match cfg.h {
        Bandwidth::Silverman => DensityModel::with_silverman(data),
        Bandwidth::Fixed(h) => DensityModel::new(data, h),
    }
}

/// `sup p̂_h`, estimated by climbing from the densest data points.
fn estimate_max(model: &DensityModel) -> Result<f64> {
    let dens = model.eval_many(model.data())?;
    let mut order: Vec<usize> = (0..dens.len()).collect();
    order.sort_by(|&a, &b| dens[b].total_cmp(&dens[a]).then(a.cmp(&b)));
    let mut best = dens[order[0]];
    for &i in order.iter().take(5) {
        let a = mean_shift_ascent(model, model.data().point(i), &AscentConfig::default())?;
        best = best.max(a.final_density());
    }
    Ok(best)
}

fn resolve_level(level: Level, model: &DensityModel, max: &mut Option<f64>) -> Result<f64> {
    match level {
        Level::Absolute(v) => Ok(v),
        Level::QMax(f) => {
            if max.is_none() {
                *max = Some(estimate_max(model)?);
            }
            Ok(f * max.expect("just computed"))
        }
    }
}

fn working_grid(model: &DensityModel, cfg: &RunConfig) -> Result<GridSpec> {
    model.default_grid(GRID_PAD_BANDWIDTHS, cfg.grid)
}

fn route_for(model: &DensityModel, cfg: &RunConfig, level: f64) -> Result<LevelSetRoute> {
    match model.dim() {
        2 => Ok(LevelSetRoute::Grid(working_grid(model, cfg)?)),
        1 => Ok(LevelSetRoute::Points {
            candidates: working_grid(model, cfg)?.nodes(),
            tol: cfg.tol.unwrap_or(0.1 * level),
        }),
        _ => {
            Ok(LevelSetRoute::Points { candidates: model.data().points().clone(), tol: cfg.tol.unwrap_or(0.1 * level) })
        }
    }
}

fn estimate_levelset(model: &DensityModel, cfg: &RunConfig, level: f64) -> Result<LevelSetApprox> {
    match route_for(model, cfg, level)? {
        LevelSetRoute::Grid(g) => contour_levelset(model, &g, level),
        LevelSetRoute::Points { candidates, tol } => extract_levelset_points(model, &candidates, level, tol),
    }
}

fn planar(points: &PointSet) -> Vec<[f64; 2]> {
    points.iter().map(|p| [p[0], p[1]]).collect()
}

fn plot_window(model: &DensityModel, cfg: &RunConfig) -> Result<([f64; 2], [f64; 2])> {
    let g = working_grid(model, cfg)?;
    Ok(([g.lower()[0], g.lower()[1]], [g.upper()[0], g.upper()[1]]))
}

pub fn levelset(cfg: &RunConfig) -> Result<()> {
    let model = fit(cfg)?;
    let mut max = None;
    let level = resolve_level(cfg.lambda.expect("validated"), &model, &mut max)?;
    let set = estimate_levelset(&model, cfg, level)?;
    if set.is_empty() {
        return Err(Error::EmptyLevelSet { level });
    }
    let eps = cfg.eps.unwrap_or(model.bandwidth());
    // contour vertices one cell apart must always link
    let link = match &set.grid {
        Some(g) => eps.max(1.01 * g.cell_diagonal()),
        None => eps,
    };
    let components = connected_components_eps(&set.vertices(), link)?;
    let upper = UpperLevelSetApprox::new(&model, model.data(), level, eps)?;
    let result = json!({
        "lambda": level,
        "bandwidth": model.bandwidth(),
        "n": model.data().len(),
        "dim": model.dim(),
        "max_density": max,
        "components": components.iter().max().map_or(0, |m| m + 1),
        "component_eps": link,
        "upper_components": upper.component_count(),
        "upper_members": upper.members.len(),
        "levelset": set,
    });
    write_json(cfg, result)?;
    if model.dim() == 2 {
        write_svg(cfg, || {
            let (lower, upper) = plot_window(&model, cfg)?;
            let reference = match cfg.scenario.as_deref().map(str::parse::<Scenario>) {
                Some(Ok(s)) if cfg.scale == Scale::None => s
                    .mixture()
                    .smoothed(model.bandwidth())
                    .and_then(|sm| true_levelset(&sm, level, None))
                    .map(|t| t.polylines().to_vec())
                    .unwrap_or_default(),
                _ => Vec::new(),
            };
            render_levelset_svg(&LevelSetPlot {
                lower,
                upper,
                width: 560.0,
                height: 600.0,
                title: Some(format!("level set at lambda = {level:.4e}, h = {:.4}", model.bandwidth())),
                data: planar(model.data()),
                estimate: set.polylines().to_vec(),
                reference,
                raster: None,
            })
        })?;
    }
    Ok(())
}

fn region_raster(
    model: &DensityModel,
    grid: &GridSpec,
    set: &ConfidenceSet,
    estimate: &PointSet,
) -> Result<RegionRaster> {
    let values = model.eval_grid(grid)?;
    let mut regions = Vec::with_capacity(values.values().len());
    for (k, &p) in values.values().iter().enumerate() {
        let x = grid.node(k);
        regions.push(decide(p, set.lambda, set.contains_at(&x, p, Some(estimate))?).region);
    }
    Ok(RegionRaster { grid: grid.clone(), regions })
}

pub fn confset(cfg: &RunConfig) -> Result<()> {
    let model = fit(cfg)?;
    let mut max = None;
    let level = resolve_level(cfg.lambda.expect("validated"), &model, &mut max)?;
    let boot = BootstrapConfig::new(cfg.replicates, cfg.seed, cfg.alphas.clone())?;
    let eval = match model.dim() {
        2 => EvalSet::grid(working_grid(&model, cfg)?),
        _ => EvalSet::default_for(&model)?,
    };
    let plan = BootstrapPlan {
        route: Some(route_for(&model, cfg, level)?),
        eval: Some(eval),
        scaled_floor: DEFAULT_SCALED_FLOOR,
    };
    let out = run_bootstrap(&model, level, &plan, &boot, &cfg.method)?;
    let estimate = out.estimate.expect("a route was given");
    let sets: Vec<&ConfidenceSet> = out.methods.iter().flat_map(|m| m.sets.iter()).collect();

    let mut regions = Value::Null;
    let mut raster = None;
    if model.dim() == 2 {
        let grid = working_grid(&model, cfg)?;
        let r = region_raster(&model, &grid, sets[0], &estimate.vertices())?;
        let count = |want: Region| r.regions.iter().filter(|&&x| x == want).count();
        regions = json!({
            "method": sets[0].method,
            "alpha": sets[0].alpha,
            "cell_area": grid.cell_volume(),
            "inside-high": count(Region::InsideHigh),
            "inside-low": count(Region::InsideLow),
            "band": count(Region::Band),
        });
        raster = Some(r);
    }
    let result = json!({
        "lambda": level,
        "bandwidth": model.bandwidth(),
        "n": model.data().len(),
        "dim": model.dim(),
        "max_density": max,
        "sets": sets,
        "regions": regions,
        "estimate": estimate,
    });
    write_json(cfg, result)?;
    if let Some(r) = raster {
        write_svg(cfg, || {
            let (lower, upper) = plot_window(&model, cfg)?;
            render_levelset_svg(&LevelSetPlot {
                lower,
                upper,
                width: 560.0,
                height: 600.0,
                title: Some(format!(
                    "{} set, {:.0}% confidence, lambda = {level:.4e}",
                    sets[0].method,
                    100.0 * (1.0 - sets[0].alpha)
                )),
                data: planar(model.data()),
                estimate: estimate.polylines().to_vec(),
                reference: Vec::new(),
                raster: Some(r),
            })
        })?;
    }
    Ok(())
}

pub fn visualize(cfg: &RunConfig) -> Result<()> {
    let model = fit(cfg)?;
    let mut max = None;
    let eps = cfg.eps.unwrap_or(model.bandwidth());
    let (levels, half_widths) = match (&cfg.levels, cfg.lambda) {
        (Some(list), _) => {
            let mut levels = list
                .iter()
                .map(|&l| resolve_level(l, &model, &mut max).map(LevelSpec::plain))
                .collect::<Result<Vec<_>>>()?;
            levels.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
            (levels, Value::Null)
        }
        (None, Some(l)) => {
            let level = resolve_level(l, &model, &mut max)?;
            let boot = BootstrapConfig::new(cfg.replicates, cfg.seed, cfg.alphas.clone())?;
            let eval = match model.dim() {
                2 => EvalSet::grid(working_grid(&model, cfg)?),
                _ => EvalSet::default_for(&model)?,
            };
            let band = method2_sup_ci(&model, level, &eval, &boot)?;
            let pairs: Vec<(f64, f64)> = band.sets.iter().map(|s| (s.alpha, s.threshold())).collect();
            (confidence_levels(level, &pairs)?, serde_json::to_value(&band.sets)?)
        }
        (None, None) => return Err(config_error("visualize needs --levels or --lambda")),
    };
    let clustering = find_modes(&model, model.data(), None, &AscentConfig::default())?;
    let title = match cfg.lambda {
        Some(_) => "confidence levels of the mode-cluster graph",
        None => "mode-cluster graph across levels",
    };
    let graph = build_cluster_graph(
        &clustering,
        &model,
        &levels,
        eps,
        Style { title: Some(title.into()), ..Style::default() },
    )?;
    let unconverged = clustering.assignment.converged.iter().filter(|c| !**c).count();
    let result = json!({
        "bandwidth": model.bandwidth(),
        "n": model.data().len(),
        "dim": model.dim(),
        "max_density": max,
        "eps": eps,
        "n_modes": clustering.modes.len(),
        "unconverged": unconverged,
        "mode_coordinates": clustering.modes.modes,
        "bands": half_widths,
        "graph": graph,
    });
    write_json(cfg, result)?;
    write_svg(cfg, || render_svg(&graph))
}

pub fn coverage(cfg: &RunConfig) -> Result<()> {
    let scenario: Scenario = cfg.scenario.as_deref().expect("validated").parse()?;
    let cov = CoverageConfig {
        scenario,
        n: cfg.n.expect("coverage has a default n"),
        alphas: cfg.alphas.clone(),
        methods: cfg.method.clone(),
        trials: cfg.trials,
        replicates: cfg.replicates,
        seed: cfg.seed,
        resolution: cfg.grid,
    };
    let reports = run_coverage(&cov)?;
    print!("{}", format_table(&reports));
    if cfg.out_json.is_some() {
        write_json(cfg, &reports)?;
    }
    if reports.iter().any(|r| r.diagnostics.inclusion_failures > 0 || r.diagnostics.band_exclusions > 0) {
        eprintln!("warning: inclusion checks failed; see diagnostics in the report");
    }
    if reports.iter().any(|r| r.method == Method::Hausdorff && r.diagnostics.empty_estimates > 0) {
        eprintln!("note: some trials had an empty estimate and were counted as misses");
    }
    Ok(())
}
