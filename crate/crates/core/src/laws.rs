//! Closed-form laws: samplers and distribution functions.
//!
//! Gamma draws come from `rand_distr` (Marsaglia–Tsang rejection, exact
//! law); the regularized incomplete gamma and `erfc` come from `statrs`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist};
use statrs::function::{erf, gamma as gamma_fn};

use crate::error::{param, Result};

fn check_index(nu: f64) -> Result<()> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(param("nu", format!("gamma index must be > 0, got {nu}")));
    }
    Ok(())
}

/// One draw of `Γ(ν, 1)`.
pub fn sample_gamma<R: Rng + ?Sized>(nu: f64, rng: &mut R) -> Result<f64> {
    check_index(nu)?;
    let g = Gamma::new(nu, 1.0).map_err(|e| param("nu", e.to_string()))?;
    Ok(g.sample(rng))
}

pub fn gamma_cdf(nu: f64, v: f64) -> Result<f64> {
    check_index(nu)?;
    if v <= 0.0 {
        return Ok(0.0);
    }
    if v.is_infinite() {
        return Ok(1.0);
    }
    Ok(gamma_fn::gamma_lr(nu, v))
}

pub fn gamma_quantile(nu: f64, p: f64) -> Result<f64> {
    check_index(nu)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(param("p", format!("probability out of range: {p}")));
    }
    let d = GammaDist::new(nu, 1.0).map_err(|e| param("nu", e.to_string()))?;
    Ok(d.inverse_cdf(p))
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Which gamma index feeds `U₁ ≙ 2(δ−1)/Z_ν`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DufresneIndex {
    /// Limits at `x → 0+` for `δ ≥ 2`: `ν = 2δ − 3`.
    Flow,
    /// Limits at the first zero for `1 < δ < 2`: `ν = 5 − 2δ`.
    FirstZero,
}

impl DufresneIndex {
    pub fn nu(self, delta: f64) -> Result<f64> {
        let nu = match self {
            DufresneIndex::Flow => 2.0 * delta - 3.0,
            DufresneIndex::FirstZero => 5.0 - 2.0 * delta,
        };
        if !(nu > 0.0) {
            return Err(param(
                "delta",
                format!("index ν = {nu} ≤ 0 for δ = {delta} in this context"),
            ));
        }
        Ok(nu)
    }
}

/// How to draw `U₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DufresneRoute {
    /// `2(δ−1) / Z_ν` with `Z_ν ~ Γ(ν, 1)`.
    Gamma,
    /// `(δ−1) ∫₀^H exp(β_u − ν u / 2) du`, trapezoidal on a uniform grid.
    Integral { horizon: f64, n_steps: usize },
}

pub fn sample_dufresne_u1<R: Rng + ?Sized>(
    delta: f64,
    index: DufresneIndex,
    route: DufresneRoute,
    rng: &mut R,
) -> Result<f64> {
    let nu = index.nu(delta)?;
    sample_u1_with_index(delta, nu, route, rng)
}

pub(crate) fn sample_u1_with_index<R: Rng + ?Sized>(
    delta: f64,
    nu: f64,
    route: DufresneRoute,
    rng: &mut R,
) -> Result<f64> {
    check_index(nu)?;
    match route {
        DufresneRoute::Gamma => Ok(2.0 * (delta - 1.0) / sample_gamma(nu, rng)?),
        DufresneRoute::Integral { horizon, n_steps } => {
            if !(horizon > 0.0) || n_steps == 0 {
                return Err(param("horizon", "integral route needs H > 0 and n_steps > 0"));
            }
            let du = horizon / n_steps as f64;
            let sd = du.sqrt();
            let mut beta = 0.0;
            let mut prev = 1.0;
            let mut acc = 0.0;
            for k in 1..=n_steps {
                let z: f64 = rng.sample(StandardNormal);
                beta += sd * z;
                let cur = (beta - 0.5 * nu * k as f64 * du).exp();
                acc += 0.5 * du * (prev + cur);
                prev = cur;
            }
            Ok((delta - 1.0) * acc)
        }
    }
}

/// `P(2(δ−1)/Z_ν ≤ u)`.
pub fn u1_cdf(delta: f64, nu: f64, u: f64) -> Result<f64> {
    if u <= 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 - gamma_cdf(nu, 2.0 * (delta - 1.0) / u)?)
}

/// `U_n = U₁(U₁ − 1)⋯(U₁ − n + 1)`; `U_0 = 1`.
pub fn u_chain(u1: f64, n: usize) -> f64 {
    (0..n).map(|k| u1 - k as f64).product()
}

/// Law of `b_k = ∫₀^∞ (Y¹)^k / (ρ¹)^{k+2} ds`: `2 / (k² Z_{ν(k)})`, `ν(k) = (2δ−3)/k`.
pub fn sample_bound_integral<R: Rng + ?Sized>(delta: f64, k: usize, rng: &mut R) -> Result<f64> {
    let (scale, nu) = bound_integral_params(delta, k)?;
    Ok(scale / sample_gamma(nu, rng)?)
}

pub fn bound_integral_cdf(delta: f64, k: usize, b: f64) -> Result<f64> {
    let (scale, nu) = bound_integral_params(delta, k)?;
    if b <= 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 - gamma_cdf(nu, scale / b)?)
}

fn bound_integral_params(delta: f64, k: usize) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(param("k", "order must be ≥ 1"));
    }
    let kf = k as f64;
    let nu = (2.0 * delta - 3.0) / kf;
    check_index(nu)?;
    Ok((2.0 / (kf * kf), nu))
}

fn tau0_index(delta: f64) -> Result<f64> {
    if !(delta > 1.0 && delta < 2.0) {
        return Err(param(
            "delta",
            format!("first zero is a.s. finite only for 1 < δ < 2, got {delta}"),
        ));
    }
    Ok(1.0 - 0.5 * delta)
}

fn check_x(x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(param("x", format!("need x > 0, got {x}")));
    }
    Ok(())
}

/// `τ₀(x) ≙ x² / (2 γ_ν)`, `ν = 1 − δ/2`.
pub fn sample_tau0<R: Rng + ?Sized>(x: f64, delta: f64, rng: &mut R) -> Result<f64> {
    let nu = tau0_index(delta)?;
    check_x(x)?;
    Ok(x * x / (2.0 * sample_gamma(nu, rng)?))
}

pub fn tau0_cdf(x: f64, delta: f64, t: f64) -> Result<f64> {
    let nu = tau0_index(delta)?;
    check_x(x)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 - gamma_cdf(nu, x * x / (2.0 * t))?)
}

pub fn tau0_quantile(x: f64, delta: f64, p: f64) -> Result<f64> {
    let nu = tau0_index(delta)?;
    check_x(x)?;
    Ok(x * x / (2.0 * gamma_quantile(nu, 1.0 - p)?))
}

/// First passage of level 1 by standard Brownian motion: `2(1 − Φ(1/√t))`.
pub fn t1_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t.is_infinite() {
        return 1.0;
    }
    erf::erfc(1.0 / (2.0 * t).sqrt())
}

/// `T₁ ≙ 1/ξ²` with `ξ` standard normal.
pub fn sample_t1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    1.0 / (z * z)
}

/// Highest order (exclusive) of pathwise differentiability at the singular point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityThreshold {
    pub delta: f64,
    /// `+∞` at `δ = 2`.
    pub n_delta: f64,
}

impl RegularityThreshold {
    /// Strict: `n = n(δ)` is excluded.
    pub fn admits(&self, n: usize) -> bool {
        (n as f64) < self.n_delta
    }

    /// Number of orders `n ≥ 1` strictly below `n(δ)`; `None` when unbounded.
    pub fn derivative_count(&self) -> Option<usize> {
        if self.n_delta.is_infinite() {
            return None;
        }
        let c = self.n_delta.ceil() as usize;
        Some(c.saturating_sub(1))
    }
}

/// `n(δ) = 2 + 1/(δ−2)` for `δ > 2`, `+∞` at 2, `1/(2−δ)` for `1 < δ < 2`.
pub fn n_delta(delta: f64) -> Result<RegularityThreshold> {
    if !(delta.is_finite() && delta > 1.0) {
        return Err(param("delta", format!("need δ > 1, got {delta}")));
    }
    let n = if delta == 2.0 {
        f64::INFINITY
    } else if delta > 2.0 {
        2.0 + 1.0 / (delta - 2.0)
    } else {
        1.0 / (2.0 - delta)
    };
    Ok(RegularityThreshold { delta, n_delta: n })
}

/// `∫₀^∞ (Y¹)^α / (ρ¹)^β ds < ∞` a.s. iff `α(δ−1) + (β−2)(δ−2) > 0`.
pub fn lemma_inte_convergent(alpha: f64, beta: f64, delta: f64) -> bool {
    alpha * (delta - 1.0) + (beta - 2.0) * (delta - 2.0) > 0.0
}

/// A named law with a seeded sampler and an analytic distribution function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum LawSpec {
    Gamma { nu: f64 },
    DufresneU1 { delta: f64, nu: f64 },
    Tau0 { x: f64, delta: f64 },
    T1,
    BoundIntegral { delta: f64, k: usize },
}

impl LawSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LawSpec::Gamma { .. } => "gamma",
            LawSpec::DufresneU1 { .. } => "dufresne-u1",
            LawSpec::Tau0 { .. } => "tau0",
            LawSpec::T1 => "t1",
            LawSpec::BoundIntegral { .. } => "bound-integral",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LawSpec::Gamma { nu } | LawSpec::DufresneU1 { nu, .. } => check_index(nu),
            LawSpec::Tau0 { x, delta } => tau0_index(delta).and(check_x(x)),
            LawSpec::T1 => Ok(()),
            LawSpec::BoundIntegral { delta, k } => bound_integral_params(delta, k).map(|_| ()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match *self {
            LawSpec::Gamma { nu } => sample_gamma(nu, rng),
            LawSpec::DufresneU1 { delta, nu } => {
                sample_u1_with_index(delta, nu, DufresneRoute::Gamma, rng)
            }
            LawSpec::Tau0 { x, delta } => sample_tau0(x, delta, rng),
            LawSpec::T1 => Ok(sample_t1(rng)),
            LawSpec::BoundIntegral { delta, k } => sample_bound_integral(delta, k, rng),
        }
    }

    pub fn cdf(&self, v: f64) -> Result<f64> {
        match *self {
            LawSpec::Gamma { nu } => gamma_cdf(nu, v),
            LawSpec::DufresneU1 { delta, nu } => u1_cdf(delta, nu, v),
            LawSpec::Tau0 { x, delta } => tau0_cdf(x, delta, v),
            LawSpec::T1 => Ok(t1_cdf(v)),
            LawSpec::BoundIntegral { delta, k } => bound_integral_cdf(delta, k, v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::StreamSeed;

    #[test]
    fn exponential_median() {
        assert!((gamma_cdf(1.0, std::f64::consts::LN_2).unwrap() - 0.5).abs() < 1e-12);
        assert!((gamma_quantile(1.0, 0.5).unwrap() - std::f64::consts::LN_2).abs() < 1e-8);
        assert!(sample_gamma(0.0, &mut StreamSeed::new(0).rng(0)).is_err());
    }

    #[test]
    fn gamma_mean() {
        let mut rng = StreamSeed::new(5).rng(0);
        let n = 100_000;
        let m = (0..n).map(|_| sample_gamma(2.0, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((m / 2.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn dufresne_median_at_delta_two() {
        // ν = 1: median U₁ = 2(δ−1) / ln 2.
        let nu = DufresneIndex::Flow.nu(2.0).unwrap();
        assert_eq!(nu, 1.0);
        let med = 2.0 / std::f64::consts::LN_2;
        assert!((u1_cdf(2.0, nu, med).unwrap() - 0.5).abs() < 1e-12);
        assert!(DufresneIndex::Flow.nu(1.5).is_err());
        assert_eq!(DufresneIndex::FirstZero.nu(1.75).unwrap(), 1.5);
    }

    #[test]
    fn chain_with_integer_root() {
        assert_eq!(u_chain(2.0, 3), 0.0);
        assert_eq!(u_chain(5.0, 0), 1.0);
        assert_eq!(u_chain(5.0, 2), 20.0);
    }

    #[test]
    fn t1_distribution_function() {
        assert_eq!(t1_cdf(0.0), 0.0);
        assert_eq!(t1_cdf(f64::INFINITY), 1.0);
        let p = t1_cdf(1.0);
        assert!((p - 2.0 * (1.0 - normal_cdf(1.0))).abs() < 1e-14);
        assert!((p - 0.3173).abs() < 1e-4);
    }

    #[test]
    fn tau0_rejects_transient_dimensions() {
        let mut rng = StreamSeed::new(0).rng(0);
        assert!(sample_tau0(1.0, 2.0, &mut rng).is_err());
        assert!(sample_tau0(1.0, 0.5, &mut rng).is_err());
        assert!(tau0_cdf(1.0, 2.5, 1.0).is_err());
    }

    #[test]
    fn tau0_quantile_inverts_cdf() {
        for p in [0.1, 0.5, 0.9] {
            let t = tau0_quantile(1.0, 1.5, p).unwrap();
            assert!((tau0_cdf(1.0, 1.5, t).unwrap() - p).abs() < 1e-6);
        }
        // Homogeneity: τ₀(2) quantiles are 4× τ₀(1) quantiles.
        let a = tau0_quantile(1.0, 1.5, 0.3).unwrap();
        let b = tau0_quantile(2.0, 1.5, 0.3).unwrap();
        assert!((b / a - 4.0).abs() < 1e-9);
    }

    #[test]
    fn threshold_table() {
        assert_eq!(n_delta(3.0).unwrap().n_delta, 3.0);
        assert_eq!(n_delta(1.5).unwrap().n_delta, 2.0);
        assert!(n_delta(2.0).unwrap().n_delta.is_infinite());
        assert!(n_delta(1.0).is_err());
        let t = n_delta(1.5).unwrap();
        assert!(t.admits(1) && !t.admits(2));
        assert_eq!(t.derivative_count(), Some(1));
        for m in 1..6 {
            let d = 2.0 + 1.0 / m as f64;
            let n = n_delta(d).unwrap().n_delta;
            assert!((n - (2.0 + m as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn lemma_inte_cases() {
        assert!(lemma_inte_convergent(1.0, 3.0, 3.0));
        assert!(!lemma_inte_convergent(0.0, 2.0, 2.7));
        assert!(lemma_inte_convergent(3.0, 0.0, 2.5));
    }
}
