use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::noise::NoisePath;
use super::rng::keyed_uniform;
use super::scheme::{check_delta, check_initial, check_stepping, BesselPath, Scheme, Stepper, StopMode};
use crate::error::{param, Error, Result};

/// Paths from several initial values driven by one Brownian path.
///
/// Ordering `x ≤ y ⇒ ρ^x ≤ ρ^y` holds at every node: when the discrete
/// scheme breaks it, the upper value is raised to the lower one and the event
/// is counted in [`FlowBundle::order_violations`].
#[derive(Clone, Debug)]
pub struct FlowBundle {
    xs: Vec<f64>,
    paths: Vec<BesselPath>,
    delta: f64,
    order_violations: usize,
    truncated: bool,
}

impl FlowBundle {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn paths(&self) -> &[BesselPath] {
        &self.paths
    }

    pub fn path(&self, i: usize) -> &BesselPath {
        &self.paths[i]
    }

    pub fn into_paths(self) -> Vec<BesselPath> {
        self.paths
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn order_violations(&self) -> usize {
        self.order_violations
    }

    /// Adaptive runs only: the horizon or step cap ended the run before
    /// every path was absorbed.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Index of initial value `x` in the bundle.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        self.xs.iter().position(|&v| v == x)
    }
}

fn check_bundle(xs: &[f64], delta: f64) -> Result<()> {
    check_delta(delta)?;
    if xs.is_empty() {
        return Err(param("xs", "at least one initial value required"));
    }
    for &x in xs {
        check_initial(x)?;
        if x == 0.0 && delta < 2.0 {
            return Err(param("xs", "x = 0 is only admitted for δ ≥ 2"));
        }
    }
    if xs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Unsorted);
    }
    Ok(())
}

struct BundleState {
    stepper: Stepper,
    mode: StopMode,
    nodes: Vec<f64>,
    steps: Vec<f64>,
    values: Vec<Vec<f64>>,
    current: Vec<f64>,
    next: Vec<f64>,
    hit: Vec<bool>,
    absorbed: Vec<Option<usize>>,
    floor_hits: Vec<usize>,
    violations: usize,
}

impl BundleState {
    fn new(xs: &[f64], delta: f64, scheme: Scheme, mode: StopMode, t0: f64, cap: usize) -> Self {
        let m = xs.len();
        let absorbed = xs
            .iter()
            .map(|&x| (mode == StopMode::StoppedAtZero && x == 0.0).then_some(0))
            .collect();
        Self {
            stepper: Stepper::new(scheme, delta),
            mode,
            nodes: {
                let mut v = Vec::with_capacity(cap);
                v.push(t0);
                v
            },
            steps: Vec::with_capacity(cap),
            values: xs
                .iter()
                .map(|&x| {
                    let mut v = Vec::with_capacity(cap);
                    v.push(x);
                    v
                })
                .collect(),
            current: xs.to_vec(),
            next: vec![0.0; m],
            hit: vec![false; m],
            absorbed,
            floor_hits: vec![0; m],
            violations: 0,
        }
    }

    fn stopped(&self, i: usize) -> bool {
        self.mode == StopMode::StoppedAtZero && self.absorbed[i].is_some()
    }

    fn all_stopped(&self) -> bool {
        (0..self.current.len()).all(|i| self.stopped(i))
    }

    /// Smallest value among paths still moving.
    fn lowest_live(&self) -> Option<f64> {
        (0..self.current.len())
            .filter(|&i| !self.stopped(i))
            .map(|i| self.current[i])
            .reduce(f64::min)
    }

    /// Advances every path by one step ending at `t_next`.
    fn advance(&mut self, dw: f64, dt: f64, u: f64, t_next: f64) -> Result<()> {
        let k = self.nodes.len() - 1;
        let m = self.current.len();
        for i in 0..m {
            self.hit[i] = false;
            if self.stopped(i) {
                self.next[i] = 0.0;
                continue;
            }
            let s = self.stepper.step(self.current[i], dw, dt, u);
            if !s.next.is_finite() {
                return Err(Error::NonFinite {
                    step: k,
                    time: t_next,
                });
            }
            self.floor_hits[i] += usize::from(s.floored);
            self.next[i] = if s.hit && self.mode == StopMode::StoppedAtZero {
                0.0
            } else {
                s.next
            };
            self.hit[i] = s.hit;
        }
        for i in 1..m {
            if self.next[i] < self.next[i - 1] {
                self.next[i] = self.next[i - 1];
                self.violations += 1;
                if self.mode == StopMode::StoppedAtZero && self.next[i] > 0.0 {
                    self.hit[i] = false;
                }
            }
        }
        for i in 0..m {
            if self.hit[i] && self.absorbed[i].is_none() {
                self.absorbed[i] = Some(k + 1);
            }
            self.current[i] = self.next[i];
            self.values[i].push(self.next[i]);
        }
        self.nodes.push(t_next);
        self.steps.push(dt);
        Ok(())
    }

    fn finish(self, xs: &[f64], delta: f64, scheme: Scheme, truncated: bool) -> FlowBundle {
        let BundleState {
            mode,
            nodes,
            steps,
            values,
            absorbed,
            floor_hits,
            violations,
            ..
        } = self;
        let paths = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| BesselPath {
                nodes: nodes.clone(),
                steps: steps.clone(),
                values: v,
                delta,
                x0: xs[i],
                scheme,
                mode,
                absorbed_at: absorbed[i],
                floor_hits: floor_hits[i],
            })
            .collect();
        FlowBundle {
            xs: xs.to_vec(),
            paths,
            delta,
            order_violations: violations,
            truncated,
        }
    }
}

pub fn simulate_flow(
    xs: &[f64],
    delta: f64,
    noise: &NoisePath,
    scheme: Scheme,
    mode: StopMode,
) -> Result<FlowBundle> {
    check_bundle(xs, delta)?;
    check_stepping(scheme)?;
    let nodes = noise.schedule().nodes();
    let mut state = BundleState::new(xs, delta, scheme, mode, nodes[0], nodes.len());
    for (k, (dw, dt)) in noise
        .increments()
        .iter()
        .zip(noise.schedule().steps())
        .enumerate()
    {
        state.advance(*dw, dt, noise.bridge_uniform(k), nodes[k + 1])?;
    }
    Ok(state.finish(xs, delta, scheme, false))
}

/// Step-size rule for [`simulate_flow_adaptive`]: `Δ = clamp(κ ρ², Δ_min, Δ_max)`
/// with `ρ` the lowest path still moving, so every step has relative size
/// at most `κ` in the natural time of the path nearest zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub kappa: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub horizon: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(param("kappa", format!("need 0 < κ < 1, got {}", self.kappa)));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max) {
            return Err(param("dt_min", "need 0 < dt_min ≤ dt_max"));
        }
        if !(self.horizon > 0.0) || self.max_steps == 0 {
            return Err(param("horizon", "need a positive horizon and step cap"));
        }
        Ok(())
    }
}

/// Coupled flow whose step size follows the lowest live path.
///
/// Resolves the approach to zero at every scale, which fixed schedules
/// cannot do near `τ₀`. Runs until every path is absorbed (stopped mode),
/// the horizon is reached, or the step cap is hit (flagged as truncated).
/// Draws one bridge key, then one normal per step, from `rng`.
pub fn simulate_flow_adaptive<R: Rng + ?Sized>(
    xs: &[f64],
    delta: f64,
    scheme: Scheme,
    mode: StopMode,
    control: StepControl,
    rng: &mut R,
) -> Result<FlowBundle> {
    check_bundle(xs, delta)?;
    check_stepping(scheme)?;
    control.validate()?;
    let bridge_key = rng.next_u64();
    let mut state = BundleState::new(xs, delta, scheme, mode, 0.0, 1024);
    // Compensated time so steps far below ulp(t) still accumulate.
    let (mut t, mut carry) = (0.0_f64, 0.0_f64);
    let mut k = 0usize;
    let truncated = loop {
        if mode == StopMode::StoppedAtZero && state.all_stopped() {
            break false;
        }
        let remaining = control.horizon - t;
        if remaining <= 0.0 {
            break mode == StopMode::StoppedAtZero;
        }
        if k == control.max_steps {
            break true;
        }
        let low = state.lowest_live().unwrap_or(1.0);
        let dt = (control.kappa * low * low)
            .clamp(control.dt_min, control.dt_max)
            .min(remaining);
        let z: f64 = rng.sample(StandardNormal);
        let y = dt - carry;
        let t_next = t + y;
        carry = (t_next - t) - y;
        state.advance(dt.sqrt() * z, dt, keyed_uniform(bridge_key, k as u64), t_next)?;
        t = t_next;
        k += 1;
    };
    Ok(state.finish(xs, delta, scheme, truncated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::{generate_noise, simulate_bes, StreamSeed, TimeGrid};

    #[test]
    fn equal_initials_give_equal_paths() {
        let w = generate_noise(&TimeGrid::horizon(1.0, 512).unwrap(), 3);
        let b = simulate_flow(&[1.0, 1.0], 2.5, &w, Scheme::EulerFloor, StopMode::Free).unwrap();
        assert_eq!(b.path(0).values(), b.path(1).values());
    }

    #[test]
    fn bundle_member_matches_single_path() {
        let w = generate_noise(&TimeGrid::horizon(1.0, 512).unwrap(), 5);
        let b = simulate_flow(&[0.5, 1.0], 2.5, &w, Scheme::EulerFloor, StopMode::Free).unwrap();
        let p = simulate_bes(1.0, 2.5, &w, Scheme::EulerFloor, StopMode::Free).unwrap();
        if b.order_violations() == 0 {
            assert_eq!(b.path(1).values(), p.values());
        }
    }

    #[test]
    fn ordered_at_every_node() {
        for seed in 0..20 {
            let w = generate_noise(&TimeGrid::horizon(1.0, 1024).unwrap(), seed);
            let b = simulate_flow(&[0.5, 1.0], 2.5, &w, Scheme::EulerFloor, StopMode::Free).unwrap();
            let (lo, hi) = (b.path(0).values(), b.path(1).values());
            assert!(lo.iter().zip(hi).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn input_validation() {
        let w = generate_noise(&TimeGrid::horizon(1.0, 8).unwrap(), 0);
        assert_eq!(
            simulate_flow(&[1.0, 0.5], 2.5, &w, Scheme::EulerFloor, StopMode::Free).unwrap_err(),
            Error::Unsorted
        );
        assert!(simulate_flow(&[0.0, 1.0], 1.5, &w, Scheme::EulerFloor, StopMode::Free).is_err());
        assert!(simulate_flow(&[0.0, 1.0], 2.0, &w, Scheme::EulerFloor, StopMode::Free).is_ok());
    }

    #[test]
    fn adaptive_run_reaches_zero_in_order() {
        let control = StepControl {
            kappa: 0.02,
            dt_min: 1e-16,
            dt_max: 1e6,
            horizon: 1e6,
            max_steps: 2_000_000,
        };
        let seed = StreamSeed::new(11);
        for i in 0..10 {
            let b = simulate_flow_adaptive(
                &[1.0, 1.01],
                1.5,
                Scheme::ImplicitDrift,
                StopMode::StoppedAtZero,
                control,
                &mut seed.rng(i),
            )
            .unwrap();
            if b.truncated() {
                continue;
            }
            let (kx, ky) = (b.path(0).absorbed_at().unwrap(), b.path(1).absorbed_at().unwrap());
            assert!(kx <= ky);
            // The upper path is still positive, and small, when the lower one dies.
            let v = b.path(1).values()[kx];
            assert!(v >= 0.0 && v < 0.05, "ρ^y at τ₀(x) = {v}");
            let nodes = b.path(0).nodes();
            assert!(nodes.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}
