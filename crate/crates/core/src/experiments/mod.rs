//! Simulation scenarios, the exact smoothed density of Gaussian mixtures,
//! coverage studies, and data ingestion.

mod coverage;
mod data;
mod mixture;
mod presets;

pub use coverage::{format_table, run_coverage, CoverageConfig, CoverageDiagnostics, CoverageReport};
pub use data::{load_csv, LoadedData, Scale};
pub use mixture::{GaussianMixture, SmoothedMixture};
pub use presets::{five_clusters_tube, four_mixture, old_faithful_like, three_gmm, with_noise_dims, Scenario};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{extract_contour_2d, refine_contour, LevelSetApprox};
use crate::kernel_density::{GridSpec, GridValues};

pub const TRUE_SET_RESOLUTION: usize = 512;

/// Box holding essentially all of the smoothed mixture's mass: each mean
/// padded by five standard deviations of its smoothed component.
pub fn mixture_window(sm: &SmoothedMixture, resolution: usize) -> Result<GridSpec> {
    let d = sm.dim();
    let mix = sm.as_mixture();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for (mean, cov) in mix.means().into_iter().zip(mix.covariances()) {
        for i in 0..d {
            let pad = 5.0 * cov[i * d + i].sqrt();
            lo[i] = lo[i].min(mean[i] - pad);
            hi[i] = hi[i].max(mean[i] + pad);
        }
    }
    GridSpec::new(lo, hi, vec![resolution; d])
}

/// Evaluates the smoothed mixture at every node of `grid`.
pub fn smoothed_grid(sm: &SmoothedMixture, grid: &GridSpec) -> Result<GridValues> {
    if grid.dim() != sm.dim() {
        return Err(Error::DimensionMismatch { expected: sm.dim(), got: grid.dim() });
    }
    let values = (0..grid.node_count()).into_par_iter().map(|k| sm.density(&grid.node(k))).collect();
    Ok(GridValues::new(grid.clone(), values))
}

/// The level set `{p_h = λ}` of a smoothed mixture in the plane, contoured
/// on `grid` (default: 512² over [`mixture_window`]) and then refined by
/// Newton steps along grid edges.
pub fn true_levelset(sm: &SmoothedMixture, level: f64, grid: Option<&GridSpec>) -> Result<LevelSetApprox> {
    if sm.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: sm.dim() });
    }
    let grid = match grid {
        Some(g) => g.clone(),
        None => mixture_window(sm, TRUE_SET_RESOLUTION)?,
    };
    let values = smoothed_grid(sm, &grid)?;
    let mut set = extract_contour_2d(&values, level)?;
    if set.is_empty() {
        return Err(Error::EmptyLevelSet { level });
    }
    refine_contour(
        &mut set,
        &grid,
        |x| {
            let g = sm.gradient(x);
            (sm.density(x), [g[0], g[1]])
        },
        8,
    );
    Ok(set)
}
