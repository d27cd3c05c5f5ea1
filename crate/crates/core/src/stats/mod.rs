//! Empirical distribution tools: KS tests, slope fits, bootstrap moments.

mod ks;
mod moment;
mod report;
mod slope;

pub use ks::{ecdf, kolmogorov_survival, ks_one_sample, ks_one_sample_censored, ks_statistic, ks_two_sample, MIN_KS_SAMPLES};
pub use moment::{moment_estimate, MomentEstimate, BOOTSTRAP_RESAMPLES};
pub use report::StatReport;
pub use slope::{slope_fit, SlopeFit};

use crate::error::{Error, Result};

/// Sorted copy; rejects non-finite values.
pub fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite sample".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Empirical quantile of sorted data, linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::SampleTooSmall { got: 0, min: 1 });
    }
    Ok(quantile_sorted(&sorted(samples)?, 0.5))
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}
