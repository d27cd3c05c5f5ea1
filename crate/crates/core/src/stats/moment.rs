use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{quantile_sorted, sorted};
use crate::error::{Error, Result};
use crate::sde::StreamSeed;

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// `E|X|^γ` with a 95% percentile bootstrap interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub gamma: f64,
    pub n: usize,
    pub value: f64,
    pub ci: (f64, f64),
    pub seed: u64,
    /// Set when `γ` is outside the band where the moment is known to be finite.
    pub warning: Option<String>,
}

impl MomentEstimate {
    pub fn overlaps(&self, other: &MomentEstimate) -> bool {
        self.ci.0 <= other.ci.1 && other.ci.0 <= self.ci.1
    }
}

/// Sample `γ`-moment of `|X|`. `band = (lo, hi)` is the open interval of
/// exponents with a finite moment; outside it the estimate carries a warning.
pub fn moment_estimate(
    samples: &[f64],
    gamma: f64,
    band: Option<(f64, f64)>,
    seed: u64,
) -> Result<MomentEstimate> {
    if samples.len() < 2 {
        return Err(Error::SampleTooSmall {
            got: samples.len(),
            min: 2,
        });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite sample".into()));
    }
    let powered: Vec<f64> = samples.iter().map(|v| v.abs().powf(gamma)).collect();
    let n = powered.len();
    let value = powered.iter().sum::<f64>() / n as f64;
    let mut rng = StreamSeed::new(seed).rng(0);
    let boots: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..n).map(|_| powered[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    let boots = sorted(&boots)?;
    let ci = (quantile_sorted(&boots, 0.025), quantile_sorted(&boots, 0.975));
    let warning = band.and_then(|(lo, hi)| {
        (!(gamma > lo && gamma < hi)).then(|| {
            format!("exponent {gamma} outside ({lo}, {hi}); the moment may be infinite")
        })
    });
    Ok(MomentEstimate {
        gamma,
        n,
        value,
        ci: (ci.0.min(value), ci.1.max(value)),
        seed,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Exp1};

    #[test]
    fn constant_samples_have_zero_width() {
        let m = moment_estimate(&[4.0; 100], 0.5, None, 1).unwrap();
        assert_eq!(m.value, 2.0);
        assert_eq!(m.ci, (2.0, 2.0));
    }

    #[test]
    fn exponential_mean() {
        let mut rng = StreamSeed::new(9).rng(0);
        let v: Vec<f64> = (0..5000).map(|_| Exp1.sample(&mut rng)).collect();
        let m = moment_estimate(&v, 1.0, Some((0.0, f64::INFINITY)), 2).unwrap();
        assert!(m.ci.0 < 1.0 && 1.0 < m.ci.1, "{:?}", m.ci);
        assert!(m.warning.is_none());
    }

    #[test]
    fn out_of_band_warns() {
        let m = moment_estimate(&[1.0, 2.0, 3.0], 2.0, Some((0.0, 2.0)), 0).unwrap();
        assert!(m.warning.is_some());
    }
}
