use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::besq::sample_besq_exact;
use super::scheme::{check_delta, BesselPath, Scheme, StopMode};
use crate::error::{param, Result};

/// Resolution of [`simulate_bes_clock`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockControl {
    /// Step in the clock `u = ∫ρ⁻²`.
    pub step: f64,
    /// Steps before giving up on the remaining readouts.
    pub max_steps: usize,
}

impl ClockControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(param("clock_step", format!("need a positive clock step, got {}", self.step)));
        }
        if self.max_steps == 0 {
            return Err(param("max_steps", "need a positive step cap"));
        }
        Ok(())
    }
}

/// `BES^x(δ)` through its Lamperti representation.
///
/// With `u = ∫₀^t ρ⁻²` as the clock, `ln(ρ/x) = W_u + νu` is a Brownian
/// motion with drift `ν = δ/2 − 1` and `t = x² ∫₀^u exp(2(W_s + νs)) ds`.
/// The log-path is sampled exactly on a uniform clock grid; only the
/// times are a quadrature. Node times use the harmonic mean of `ρ²` over
/// each step, which makes the trapezoid of `∫ρ⁻² dt` return the clock
/// exactly. Every readout time becomes a node, placed by a Brownian-bridge
/// draw inside the step that crosses it.
///
/// The path ends at the last readout, or earlier if `max_steps` runs out:
/// readouts past `t_end` were not reached. Requires `δ ≥ 2`: below that the
/// clock is infinite at the first zero.
pub fn simulate_bes_clock<R: Rng + ?Sized>(
    x0: f64,
    delta: f64,
    readouts: &[f64],
    control: ClockControl,
    rng: &mut R,
) -> Result<BesselPath> {
    check_delta(delta)?;
    if delta < 2.0 {
        return Err(param("delta", format!("the clock representation needs δ ≥ 2, got {delta}")));
    }
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(param("x0", format!("need a positive initial value, got {x0}")));
    }
    if readouts.iter().any(|&r| !(r > 0.0 && r.is_finite()))
        || readouts.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(param("readouts", "readout times must be positive and increasing"));
    }
    control.validate()?;
    let nu = 0.5 * delta - 1.0;
    let sd = control.step.sqrt();
    let x2 = x0 * x0;
    // Time elapsed over a clock stretch of length `len` between log-levels `a` and `b`.
    let elapsed = |a: f64, b: f64, len: f64| 2.0 * x2 * len / ((-2.0 * a).exp() + (-2.0 * b).exp());

    let mut nodes = vec![0.0];
    let mut steps = Vec::new();
    let mut values = vec![x0];
    let (mut t, mut level) = (0.0_f64, 0.0_f64);
    let mut next = 0;
    let mut k = 0;
    while next < readouts.len() && k < control.max_steps {
        let z: f64 = rng.sample(StandardNormal);
        let end = level + sd * z + nu * control.step;
        let mut len = control.step;
        loop {
            let dt = elapsed(level, end, len);
            if next < readouts.len() && t + dt >= readouts[next] {
                let r = readouts[next];
                let f = ((r - t) / dt).clamp(0.0, 1.0);
                let zb: f64 = rng.sample(StandardNormal);
                level += f * (end - level) + (f * (1.0 - f) * len).sqrt() * zb;
                len *= 1.0 - f;
                steps.push(f * dt);
                t = r;
                nodes.push(t);
                values.push(x0 * level.exp());
                next += 1;
                continue;
            }
            if next < readouts.len() {
                t += dt;
                steps.push(dt);
                level = end;
                nodes.push(t);
                values.push(x0 * level.exp());
            }
            break;
        }
        k += 1;
    }
    Ok(BesselPath {
        nodes,
        steps,
        values,
        delta,
        x0,
        scheme: Scheme::Lamperti,
        mode: StopMode::Free,
        absorbed_at: None,
        floor_hits: 0,
    })
}

/// A transient `BES^0(δ)` path followed until it escapes `level`, with
/// its last passage time there.
#[derive(Clone, Debug)]
pub struct Escape {
    pub path: BesselPath,
    pub last_passage: f64,
}

/// `BES^0(δ)` for `δ > 2` run in the clock of [`simulate_bes_clock`] until
/// the chance of returning to `level`, `(level/ρ)^{δ−2}`, drops below
/// `return_chance`.
///
/// The first `10⁻⁸·level²` of time is one exact draw of the squared
/// process. A return to `level` inside a clock step, with both ends on the
/// same side, is detected with the Brownian-bridge crossing probability of
/// the log-path, which is exact. Such a return is placed at the middle of the
/// step. `None` when `max_steps` runs out first.
pub fn simulate_bes_to_escape<R: Rng + ?Sized>(
    delta: f64,
    level: f64,
    return_chance: f64,
    control: ClockControl,
    rng: &mut R,
) -> Result<Option<Escape>> {
    check_delta(delta)?;
    if delta <= 2.0 {
        return Err(param("delta", format!("escape needs a transient process, δ > 2; got {delta}")));
    }
    if !(level > 0.0 && level.is_finite()) {
        return Err(param("level", format!("need a positive level, got {level}")));
    }
    if !(return_chance > 0.0 && return_chance < 1.0) {
        return Err(param("return_chance", format!("need a probability in (0, 1), got {return_chance}")));
    }
    control.validate()?;
    let nu = 0.5 * delta - 1.0;
    let sd = control.step.sqrt();
    let t0 = 1e-8 * level * level;
    let r0 = sample_besq_exact(0.0, delta, t0, rng)?.sqrt().max(f64::MIN_POSITIVE);
    let r2 = r0 * r0;
    let target = (level / r0).ln();
    let escape = target - return_chance.ln() / (2.0 * nu);

    let mut nodes = vec![0.0, t0];
    let mut steps = vec![t0];
    let mut values = vec![0.0, r0];
    let (mut t, mut log) = (t0, 0.0_f64);
    let mut last = (r0 <= level).then_some(t0);
    for _ in 0..control.max_steps {
        if log > escape {
            let last_passage = last.unwrap_or(0.0);
            let path = BesselPath {
                nodes,
                steps,
                values,
                delta,
                x0: 0.0,
                scheme: Scheme::Lamperti,
                mode: StopMode::Free,
                absorbed_at: None,
                floor_hits: 0,
            };
            return Ok(Some(Escape { path, last_passage }));
        }
        let z: f64 = rng.sample(StandardNormal);
        let end = log + sd * z + nu * control.step;
        let dt = 2.0 * r2 * control.step / ((-2.0 * log).exp() + (-2.0 * end).exp());
        let (a, b) = (log - target, end - target);
        if a * b <= 0.0 {
            let w = if a == b { 1.0 } else { a / (a - b) };
            last = Some(t + w * dt);
        } else if rng.random::<f64>() < (-2.0 * a * b / control.step).exp() {
            last = Some(t + 0.5 * dt);
        }
        t += dt;
        log = end;
        nodes.push(t);
        steps.push(dt);
        values.push(r0 * log.exp());
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::integral_inverse_square;
    use crate::sde::StreamSeed;

    const CONTROL: ClockControl = ClockControl {
        step: 0.01,
        max_steps: 1_000_000,
    };

    #[test]
    fn readouts_are_nodes_and_the_clock_is_exact() {
        let readouts = [0.5, 1.0, 7.0];
        let p = simulate_bes_clock(1.0, 2.5, &readouts, CONTROL, &mut StreamSeed::new(3).rng(0)).unwrap();
        for r in readouts {
            assert!(p.nodes().contains(&r));
        }
        assert_eq!(*p.nodes().last().unwrap(), 7.0);
        assert!(p.nodes().windows(2).all(|w| w[1] >= w[0]));
        // Up to the first readout every node closes a full step of the clock.
        let clock = integral_inverse_square(&p, 7.0);
        let k = p.index_at_or_before(0.5) - 1;
        assert!((clock[k] - k as f64 * CONTROL.step).abs() < 1e-9, "clock {} at node {k}", clock[k]);
    }

    #[test]
    fn terminal_mean_of_the_square() {
        // E ρ_t² = x² + δt for every δ.
        let n = 4000;
        let mean = (0..n)
            .map(|i| {
                let p = simulate_bes_clock(1.0, 3.0, &[2.0], CONTROL, &mut StreamSeed::new(9).rng(i)).unwrap();
                p.terminal().powi(2)
            })
            .sum::<f64>()
            / n as f64;
        // sd of ρ² at t = 2 is about 6.6, so 4000 paths give a standard error near 0.1.
        assert!((mean - 7.0).abs() < 0.4, "mean {mean}");
    }

    #[test]
    fn rejects_dimensions_below_two_and_bad_readouts() {
        let mut rng = StreamSeed::new(0).rng(0);
        assert!(simulate_bes_clock(1.0, 1.5, &[1.0], CONTROL, &mut rng).is_err());
        assert!(simulate_bes_clock(1.0, 2.5, &[1.0, 0.5], CONTROL, &mut rng).is_err());
        assert!(simulate_bes_clock(0.0, 2.5, &[1.0], CONTROL, &mut rng).is_err());
    }

    #[test]
    fn last_passage_follows_the_gamma_law() {
        // L_x for BES^0(3) is x²/(2γ_{1/2}) = x²/χ²₁, so P(L_1 ≤ 1) = P(χ²₁ ≥ 1) ≈ 0.3173.
        let control = ClockControl { step: 0.005, max_steps: 1_000_000 };
        let n = 4000;
        let below = (0..n)
            .filter(|&i| {
                let e = simulate_bes_to_escape(3.0, 1.0, 1e-4, control, &mut StreamSeed::new(4).rng(i))
                    .unwrap()
                    .unwrap();
                assert!(e.path.nodes().windows(2).all(|w| w[1] >= w[0]));
                e.last_passage <= 1.0
            })
            .count();
        let p = below as f64 / n as f64;
        assert!((p - 0.3173).abs() < 0.03, "P(L ≤ 1) = {p}");
    }

    #[test]
    fn step_cap_truncates() {
        let short = ClockControl { step: 0.01, max_steps: 10 };
        let p = simulate_bes_clock(1.0, 2.0, &[1e6], short, &mut StreamSeed::new(1).rng(0)).unwrap();
        assert!(*p.nodes().last().unwrap() < 1e6);
        assert_eq!(p.len(), 11);
    }
}
