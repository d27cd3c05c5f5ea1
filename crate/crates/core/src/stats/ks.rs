//! Kolmogorov–Smirnov tests with asymptotic p-values.

use super::report::StatReport;
use super::sorted;
use crate::error::{Error, Result};

/// Smallest sample accepted; the asymptotic p-value is poor below this.
pub const MIN_KS_SAMPLES: usize = 50;

/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²)`, the limiting survival function of `√n·D`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 * sum.abs().max(1e-300) {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value with Stephens' finite-sample correction for effective size `n`.
fn p_value(d: f64, n: f64) -> f64 {
    let sn = n.sqrt();
    kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)
}

fn check_size(n: usize) -> Result<()> {
    if n < MIN_KS_SAMPLES {
        return Err(Error::SampleTooSmall {
            got: n,
            min: MIN_KS_SAMPLES,
        });
    }
    Ok(())
}

/// Empirical CDF of the samples at `t`.
pub fn ecdf(sorted: &[f64], t: f64) -> f64 {
    sorted.partition_point(|&v| v <= t) as f64 / sorted.len() as f64
}

/// `sup |F_n − F|` for a continuous reference CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let v = sorted(samples)?;
    let n = v.len() as f64;
    Ok(v.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    }))
}

/// One-sample test; passes at level 0.01 unless re-thresholded.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<StatReport> {
    check_size(samples.len())?;
    let d = ks_statistic(samples, cdf)?;
    let p = p_value(d, samples.len() as f64);
    Ok(StatReport::p_test("ks-one-sample", vec![samples.len()], d, p))
}

/// One-sample test when `censored` further draws are only known to exceed
/// every value in `observed` (e.g. runs stopped by a step cap).
///
/// The distance is the supremum over the observed range, where the
/// empirical CDF of the full sample is known; the p-value treats it as the
/// full distance.
pub fn ks_one_sample_censored(
    observed: &[f64],
    censored: usize,
    cdf: impl Fn(f64) -> f64,
) -> Result<StatReport> {
    let n = observed.len() + censored;
    check_size(n)?;
    let v = sorted(observed)?;
    let nf = n as f64;
    let d = v.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f)
    });
    Ok(StatReport::p_test("ks-one-sample-censored", vec![n], d, p_value(d, nf))
        .metric("censored", censored as f64))
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<StatReport> {
    check_size(a.len())?;
    check_size(b.len())?;
    let (x, y) = (sorted(a)?, sorted(b)?);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < n && j < m {
        let t = x[i].min(y[j]);
        while i < n && x[i] <= t {
            i += 1;
        }
        while j < m && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    Ok(StatReport::p_test("ks-two-sample", vec![n, m], d, p_value(d, ne)))
}
