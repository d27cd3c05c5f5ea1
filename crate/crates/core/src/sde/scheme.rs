use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bridge::{zero_touch_probability, BRIDGE_CUTOFF};
use super::noise::NoisePath;
use crate::error::{param, Error, Result};

/// The drift of the Euler-floor scheme is evaluated at `max(ρ, Δ^FLOOR_EXPONENT)`.
pub const FLOOR_EXPONENT: f64 = 0.75;


/// Discretization of `dρ = dβ + ((δ−1)/2) dt / ρ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Explicit Euler with the drift evaluated at `max(ρ_k, Δ^0.75)`.
    /// A step that lands below zero is reflected.
    #[default]
    EulerFloor,
    /// Drift taken at the new point: the positive root of
    /// `ρ' = ρ + Δβ + ((δ−1)/2) Δ / ρ'`. Monotone in `ρ`, always positive.
    ImplicitDrift,
    /// Not a time-stepping rule: `ρ = x·exp(W_u + νu)` with `ν = δ/2 − 1`,
    /// stepped uniformly in the clock `u = ∫ρ⁻²`. Only for `δ ≥ 2` and single
    /// paths; see [`simulate_bes_clock`](super::simulate_bes_clock).
    Lamperti,
    /// Not a time-stepping rule: `ρ²` drawn from its exact noncentral
    /// chi-square transition. Single paths only; see [`first_zero`](super::first_zero).
    ExactSquare,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::EulerFloor => "euler-floor",
            Scheme::ImplicitDrift => "implicit-drift",
            Scheme::Lamperti => "lamperti",
            Scheme::ExactSquare => "exact-square",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler-floor" => Ok(Scheme::EulerFloor),
            "implicit-drift" => Ok(Scheme::ImplicitDrift),
            "lamperti" => Ok(Scheme::Lamperti),
            "exact-square" => Ok(Scheme::ExactSquare),
            other => Err(param(
                "scheme",
                format!("unknown scheme `{other}` (expected euler-floor, implicit-drift, lamperti or exact-square)"),
            )),
        }
    }
}

/// Whether a path continues past its first zero or stays there.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopMode {
    #[default]
    Free,
    /// `ρ_{t ∧ τ₀}`: frozen at exactly 0 from the first zero hit on.
    StoppedAtZero,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Step {
    pub next: f64,
    pub hit: bool,
    pub floored: bool,
}

/// One step of the chosen scheme plus the zero test.
///
/// For `δ < 2` a zero hit is recorded when the step's uniform falls below
/// the probability that a Bessel bridge between the two nodes touches zero;
/// for `δ ≥ 2` zero is polar and nothing is recorded. The test is monotone
/// in the endpoints, so coupled paths sharing the uniform keep their order.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Stepper {
    scheme: Scheme,
    drift: f64,
    /// `1 − δ/2`; no bridge test when `≤ 0`.
    mu: f64,
}

impl Stepper {
    pub fn new(scheme: Scheme, delta: f64) -> Self {
        Self {
            scheme,
            drift: 0.5 * (delta - 1.0),
            mu: 1.0 - 0.5 * delta,
        }
    }

    #[inline]
    pub fn step(&self, rho: f64, dw: f64, dt: f64, u: f64) -> Step {
        let a = rho + dw;
        let (next, floored) = match self.scheme {
            Scheme::EulerFloor => {
                let floor = dt.powf(FLOOR_EXPONENT);
                let cand = a + self.drift * dt / rho.max(floor);
                (cand.abs(), rho < floor || cand <= 0.0)
            }
            Scheme::ImplicitDrift => {
                let disc = (a * a + 4.0 * self.drift * dt).sqrt();
                // Avoid cancellation for a < 0.
                let next = if a >= 0.0 {
                    0.5 * (a + disc)
                } else {
                    2.0 * self.drift * dt / (disc - a)
                };
                (next, a <= 0.0)
            }
            Scheme::Lamperti | Scheme::ExactSquare => unreachable!("rejected by check_stepping"),
        };
        Step {
            next,
            hit: self.bridge_touches(rho, next, dt, u),
            floored,
        }
    }

    #[inline]
    pub(crate) fn bridge_touches(&self, a: f64, b: f64, dt: f64, u: f64) -> bool {
        if self.mu <= 0.0 {
            return false;
        }
        let z = a * b / dt;
        z < BRIDGE_CUTOFF && u < zero_touch_probability(self.mu, z)
    }
}

/// One discretized trajectory of `BES^x(δ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BesselPath {
    pub(crate) nodes: Vec<f64>,
    /// Step lengths, kept apart from the nodes: far from the origin a step
    /// can be shorter than the spacing of representable times.
    pub(crate) steps: Vec<f64>,
    pub(crate) values: Vec<f64>,
    pub(crate) delta: f64,
    pub(crate) x0: f64,
    pub(crate) scheme: Scheme,
    pub(crate) mode: StopMode,
    pub(crate) absorbed_at: Option<usize>,
    pub(crate) floor_hits: usize,
}

impl BesselPath {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Length of the step leaving each node; one fewer than the nodes.
    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn mode(&self) -> StopMode {
        self.mode
    }

    /// First node reached by a step that hit zero.
    pub fn absorbed_at(&self) -> Option<usize> {
        self.absorbed_at
    }

    /// Steps on which the floor (or the zero crossing) was engaged.
    pub fn floor_hits(&self) -> usize {
        self.floor_hits
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn terminal(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Scheme floor `Δ^0.75` for the step leaving node `k` (the last step for the final node).
    pub fn floor_at(&self, k: usize) -> f64 {
        let k = k.min(self.steps.len() - 1);
        self.steps[k].powf(FLOOR_EXPONENT)
    }

    /// Index of the last node with time `≤ t`.
    pub fn index_at_or_before(&self, t: f64) -> usize {
        match self.nodes.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(k) => k,
            Err(0) => 0,
            Err(k) => k - 1,
        }
    }

    /// Linear interpolation of the path at time `t` (clamped to the grid).
    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.index_at_or_before(t);
        if k + 1 >= self.nodes.len() {
            return self.terminal();
        }
        let (t0, t1) = (self.nodes[k], self.nodes[k + 1]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        self.values[k] + w * (self.values[k + 1] - self.values[k])
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta.is_finite() && delta > 1.0) {
        return Err(param("delta", format!("dimension must satisfy δ > 1, got {delta}")));
    }
    Ok(())
}

/// Time-stepping entry points accept every scheme but the clock representation.
pub(crate) fn check_stepping(scheme: Scheme) -> Result<()> {
    match scheme {
        Scheme::Lamperti => Err(param(
            "scheme",
            "lamperti paths run in their own clock; use simulate_bes_clock",
        )),
        Scheme::ExactSquare => Err(param(
            "scheme",
            "exact-square draws single paths without Brownian increments and cannot drive a flow",
        )),
        _ => Ok(()),
    }
}

pub(crate) fn check_initial(x0: f64) -> Result<()> {
    if !(x0.is_finite() && x0 >= 0.0) {
        return Err(param("x0", format!("initial value must be finite and ≥ 0, got {x0}")));
    }
    Ok(())
}

/// Simulates `ρ_{k+1} = ρ_k + Δβ_k + ((δ−1)/2) Δ / ρ̂_k` along `noise`.
pub fn simulate_bes(
    x0: f64,
    delta: f64,
    noise: &NoisePath,
    scheme: Scheme,
    mode: StopMode,
) -> Result<BesselPath> {
    check_delta(delta)?;
    check_initial(x0)?;
    check_stepping(scheme)?;
    let nodes = noise.schedule().nodes();
    let stepper = Stepper::new(scheme, delta);
    let mut values = Vec::with_capacity(nodes.len());
    values.push(x0);
    let mut absorbed_at = None;
    let mut floor_hits = 0;
    if mode == StopMode::StoppedAtZero && x0 == 0.0 {
        absorbed_at = Some(0);
    }
    let mut rho = x0;
    for (k, (dw, dt)) in noise
        .increments()
        .iter()
        .zip(noise.schedule().steps())
        .enumerate()
    {
        if mode == StopMode::StoppedAtZero && absorbed_at.is_some() {
            values.push(0.0);
            continue;
        }
        let s = stepper.step(rho, *dw, dt, noise.bridge_uniform(k));
        if !s.next.is_finite() {
            return Err(Error::NonFinite {
                step: k,
                time: nodes[k + 1],
            });
        }
        floor_hits += usize::from(s.floored);
        rho = s.next;
        if s.hit {
            absorbed_at.get_or_insert(k + 1);
            if mode == StopMode::StoppedAtZero {
                rho = 0.0;
            }
        }
        values.push(rho);
    }
    Ok(BesselPath {
        nodes,
        steps: noise.schedule().steps().collect(),
        values,
        delta,
        x0,
        scheme,
        mode,
        absorbed_at,
        floor_hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::{generate_noise, TimeGrid};

    #[test]
    fn first_step_drift_matches_euler() {
        // δ = 2, x0 = 1, zero noise: ρ_1 = 1 + (1/2)Δ.
        let g = TimeGrid::horizon(1e-3, 1).unwrap();
        let w = NoisePath::from_increments(g.into(), vec![0.0]).unwrap();
        let p = simulate_bes(1.0, 2.0, &w, Scheme::EulerFloor, StopMode::Free).unwrap();
        assert!((p.values()[1] - (1.0 + 0.5e-3)).abs() < 1e-15);
        // The implicit root agrees to first order.
        let q = simulate_bes(1.0, 2.0, &w, Scheme::ImplicitDrift, StopMode::Free).unwrap();
        assert!((q.values()[1] - p.values()[1]).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_dimension() {
        let w = generate_noise(&TimeGrid::horizon(1.0, 8).unwrap(), 0);
        assert!(simulate_bes(1.0, 1.0, &w, Scheme::EulerFloor, StopMode::Free).is_err());
        assert!(simulate_bes(-1.0, 2.5, &w, Scheme::EulerFloor, StopMode::Free).is_err());
    }

    #[test]
    fn stopped_paths_freeze_at_zero() {
        let g = TimeGrid::horizon(4.0, 4096).unwrap();
        let mut frozen = 0;
        for seed in 0..50 {
            let w = generate_noise(&g, seed);
            let p = simulate_bes(0.1, 1.5, &w, Scheme::EulerFloor, StopMode::StoppedAtZero).unwrap();
            assert_eq!(p.values()[0], 0.1);
            assert!(p.values().iter().all(|&v| v >= 0.0));
            if let Some(k) = p.absorbed_at() {
                frozen += 1;
                assert!(p.values()[k..].iter().all(|&v| v == 0.0));
                assert!(p.values()[..k].iter().all(|&v| v > 0.0));
            }
        }
        assert!(frozen > 25, "most paths from 0.1 should hit zero by t = 4");
    }

    #[test]
    fn implicit_scheme_is_positive_and_monotone() {
        let st = Stepper::new(Scheme::ImplicitDrift, 1.2);
        let mut prev = 0.0;
        let mut hit_before = true;
        for i in 0..200 {
            let rho = i as f64 * 0.01;
            let s = st.step(rho, -0.7, 1e-2, 0.3);
            assert!(s.next > 0.0);
            assert!(s.next >= prev);
            // Once the step clears zero for this uniform it clears it from higher starts too.
            assert!(hit_before || !s.hit);
            hit_before = s.hit;
            prev = s.next;
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in [Scheme::EulerFloor, Scheme::ImplicitDrift, Scheme::Lamperti, Scheme::ExactSquare] {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("lamperti".parse::<Scheme>().unwrap(), Scheme::Lamperti);
        assert!("milstein".parse::<Scheme>().is_err());
    }
}
