use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordinary least squares line through `(x, y)` points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub abscissae: Vec<f64>,
    pub ordinates: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope, from the residual variance on `n − 2` degrees of freedom.
    pub stderr: f64,
}

pub fn slope_fit(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::SampleTooSmall {
            got: points.len(),
            min: 3,
        });
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Degenerate("non-finite point".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let scale = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max).max(1.0);
    if sxx <= 1e-24 * scale * scale * n {
        return Err(Error::Degenerate("abscissae are all equal".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        abscissae: points.iter().map(|p| p.0).collect(),
        ordinates: points.iter().map(|p| p.1).collect(),
        slope,
        intercept,
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn exact_line() {
        let pts: Vec<_> = (0..5).map(|k| (k as f64, 2.0 * k as f64 + 1.0)).collect();
        let f = slope_fit(&pts).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!(f.stderr < 1e-7);
    }

    #[test]
    fn noisy_line_within_three_stderr() {
        let mut rng = crate::sde::StreamSeed::new(3).rng(0);
        let pts: Vec<_> = (0..20)
            .map(|k| {
                let e: f64 = rng.sample(StandardNormal);
                (k as f64, 2.0 * k as f64 + 1e-3 * e)
            })
            .collect();
        let f = slope_fit(&pts).unwrap();
        assert!((f.slope - 2.0).abs() < 3.0 * f.stderr);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(slope_fit(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(slope_fit(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).is_err());
    }
}
