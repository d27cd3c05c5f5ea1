//! Probability that a Bessel bridge of dimension `δ < 2` touches zero.
//!
//! Killed and reflected `BES(δ)` transition densities differ only in the
//! order of the modified Bessel function, `I_{μ}` against `I_{−μ}` with
//! `μ = 1 − δ/2`, so a bridge from `a` to `b` over time `Δ` avoids zero
//! with probability `I_μ(z) / I_{−μ}(z)`, `z = ab/Δ`.

use statrs::function::gamma::gamma;

/// Beyond this `z` the touch probability is below `1e-17`.
pub(crate) const BRIDGE_CUTOFF: f64 = 20.0;

const SERIES_LIMIT: f64 = 10.0;

fn bessel_i_series(nu: f64, z: f64) -> f64 {
    let h = 0.5 * z;
    let q = h * h;
    let mut term = h.powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    for k in 1..500 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// `1 − I_μ(z)/I_{−μ}(z)` for `0 < μ < 1`.
pub(crate) fn zero_touch_probability(mu: f64, z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    if z < SERIES_LIMIT {
        (1.0 - bessel_i_series(mu, z) / bessel_i_series(-mu, z)).clamp(0.0, 1.0)
    } else {
        // (2/π) sin(μπ) K_μ / I_{−μ} with the leading asymptotic correction.
        let s = 4.0 * mu * mu;
        let corr = (1.0 + (s - 1.0) / (8.0 * z)) / (1.0 - (s - 1.0) / (8.0 * z));
        2.0 * (mu * std::f64::consts::PI).sin() * (-2.0 * z).exp() * corr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_case_is_closed_form() {
        // μ = 1/2 is reflected Brownian motion: 2e^{−2z} / (1 + e^{−2z}).
        for z in [0.01, 0.3, 1.0, 4.0, 9.0, 12.0, 19.0] {
            let e = (-2.0 * z as f64).exp();
            let exact = 2.0 * e / (1.0 + e);
            let p = zero_touch_probability(0.5, z);
            assert!((p / exact - 1.0).abs() < 1e-6, "z = {z}: {p} vs {exact}");
        }
    }

    #[test]
    fn continuous_across_the_switch() {
        for mu in [0.05, 0.25, 0.45] {
            let lo = zero_touch_probability(mu, SERIES_LIMIT * (1.0 - 1e-9));
            let hi = zero_touch_probability(mu, SERIES_LIMIT * (1.0 + 1e-9));
            assert!((lo / hi - 1.0).abs() < 2e-3, "μ = {mu}: {lo} vs {hi}");
        }
    }

    #[test]
    fn decreasing_in_z() {
        let mut prev = 1.0;
        for k in 0..200 {
            let p = zero_touch_probability(0.25, 0.1 * k as f64);
            assert!(p <= prev);
            prev = p;
        }
    }
}
