use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use super::grid::Schedule;
use super::rng::keyed_uniform;
use super::scheme::{check_delta, check_initial, BesselPath, Scheme, StopMode, Stepper};
use crate::error::{param, Result};

/// One draw of `X_t` for `BESQ^{x²}(δ)` started at `x_sq`.
///
/// `X_t / t` is noncentral chi-square with `δ` degrees of freedom and
/// noncentrality `x_sq / t`, sampled as a Poisson mixture of central
/// chi-squares. Not coupled to any noise path.
pub fn sample_besq_exact<R: Rng + ?Sized>(x_sq: f64, delta: f64, t: f64, rng: &mut R) -> Result<f64> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(param("delta", format!("need δ > 0, got {delta}")));
    }
    if !(x_sq.is_finite() && x_sq >= 0.0) {
        return Err(param("x_sq", format!("need x² ≥ 0, got {x_sq}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(param("t", format!("need t ≥ 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(x_sq);
    }
    let half_nc = 0.5 * x_sq / t;
    let k = if half_nc > 0.0 {
        Poisson::new(half_nc)
            .map_err(|e| param("x_sq", e.to_string()))?
            .sample(rng)
    } else {
        0.0
    };
    let shape = 0.5 * delta + k;
    let g = Gamma::new(shape, 1.0).map_err(|e| param("delta", e.to_string()))?;
    Ok(2.0 * t * g.sample(rng))
}

/// A path of `BES^x(δ)` whose nodes are exact draws of the transition law.
///
/// Zero touches between nodes use the bridge test of the stepping schemes,
/// which is exact given the endpoints. In stopped mode the path is 0 from the
/// first node after a touch. The draws are not driven by Brownian
/// increments, so these paths cannot be coupled into a flow.
pub fn simulate_bes_exact<R: Rng + ?Sized>(
    x0: f64,
    delta: f64,
    schedule: &Schedule,
    mode: StopMode,
    rng: &mut R,
) -> Result<BesselPath> {
    check_delta(delta)?;
    check_initial(x0)?;
    let stepper = Stepper::new(Scheme::ExactSquare, delta);
    let bridge_key = rng.next_u64();
    let nodes = schedule.nodes();
    let steps: Vec<f64> = schedule.steps().collect();
    let mut values = Vec::with_capacity(nodes.len());
    values.push(x0);
    let mut absorbed_at = (mode == StopMode::StoppedAtZero && x0 == 0.0).then_some(0);
    let mut rho = x0;
    for (k, &dt) in steps.iter().enumerate() {
        if mode == StopMode::StoppedAtZero && absorbed_at.is_some() {
            values.push(0.0);
            continue;
        }
        let next = sample_besq_exact(rho * rho, delta, dt, rng)?.sqrt();
        let hit = stepper.bridge_touches(rho, next, dt, keyed_uniform(bridge_key, k as u64));
        rho = next;
        if hit {
            absorbed_at.get_or_insert(k + 1);
            if mode == StopMode::StoppedAtZero {
                rho = 0.0;
            }
        }
        values.push(rho);
    }
    Ok(BesselPath {
        nodes,
        steps,
        values,
        delta,
        x0,
        scheme: Scheme::ExactSquare,
        mode,
        absorbed_at,
        floor_hits: 0,
    })
}
