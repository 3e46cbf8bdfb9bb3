use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel_density::SampleSet;

/// `n` indices drawn uniformly with replacement from `0..n`.
pub fn resample_indices<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Multiplicity of each observation in a resample drawn as by [`resample_indices`].
pub fn resample_counts<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for i in resample_indices(n, rng) {
        counts[i] += 1;
    }
    counts
}

/// A bootstrap sample from the empirical measure: `n` draws with replacement.
pub fn bootstrap_resample<R: Rng + ?Sized>(data: &SampleSet, rng: &mut R) -> SampleSet {
    let idx = resample_indices(data.len(), rng);
    SampleSet::new(data.select(&idx)).expect("a resample of a valid sample is valid")
}

/// The `⌈q·B⌉`-th smallest of the `B` values (1-indexed).
///
/// `q·B` within `1e-9` of an integer is treated as that integer so that
/// decimal levels such as `0.95·100` are not pushed up by representation
/// error.
pub fn empirical_quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("quantile of an empty sample".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("quantile level {q} is not inside (0, 1)")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("NaN among quantile inputs".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let b = sorted.len();
    let x = q * b as f64;
    let rank = if (x - x.round()).abs() < 1e-9 { x.round() } else { x.ceil() };
    let k = (rank as usize).clamp(1, b);
    Ok(sorted[k - 1])
}
