use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::besq::sample_besq_exact;
use super::grid::Schedule;
use super::rng::keyed_uniform;
use super::scheme::{check_delta, check_initial, BesselPath, Scheme, Step, Stepper};
use crate::error::{param, Error, Result};

/// First passage below a level; `time` is `+∞` when the grid never crosses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingTime {
    pub level: f64,
    pub time: f64,
    /// First node with value `≤ level`.
    pub node: Option<usize>,
}

impl HittingTime {
    pub fn is_finite(&self) -> bool {
        self.time.is_finite()
    }
}

/// `inf{t : ρ_t ≤ level}` with linear interpolation in `ρ` between the
/// bracketing nodes.
pub fn hitting_time(path: &BesselPath, level: f64) -> HittingTime {
    let (nodes, values) = (path.nodes(), path.values());
    let Some(k) = values.iter().position(|&v| v <= level) else {
        return HittingTime {
            level,
            time: f64::INFINITY,
            node: None,
        };
    };
    let time = if k == 0 {
        nodes[0]
    } else {
        let (a, b) = (values[k - 1], values[k]);
        let w = if a > b { (a - level) / (a - b) } else { 1.0 };
        nodes[k - 1] + w.clamp(0.0, 1.0) * (nodes[k] - nodes[k - 1])
    };
    HittingTime {
        level,
        time,
        node: Some(k),
    }
}

/// `sup{t : ρ_t = level}` on the grid: the last interpolated crossing of
/// `level`, or `None` if the path never reaches it.
pub fn last_passage(path: &BesselPath, level: f64) -> Option<f64> {
    let (nodes, values) = (path.nodes(), path.values());
    for k in (1..values.len()).rev() {
        let (a, b) = (values[k - 1], values[k]);
        if (a - level) * (b - level) <= 0.0 && a != b {
            let w = ((level - a) / (b - a)).clamp(0.0, 1.0);
            return Some(nodes[k - 1] + w * (nodes[k] - nodes[k - 1]));
        }
    }
    values.iter().any(|&v| v == level).then(|| {
        let k = values.iter().rposition(|&v| v == level).unwrap();
        nodes[k]
    })
}

/// First zero of a single path, simulated step by step without storing it
/// and stopped at the first hit. For the stepping schemes this consumes the
/// generator exactly as [`NoisePath::sample`](super::NoisePath::sample) does
/// up to that step, so the result equals the stopped path's absorption node.
/// [`Scheme::ExactSquare`] draws each node from the exact transition instead;
/// the time is then exact up to the node spacing.
pub fn first_zero<R: Rng + ?Sized>(
    x0: f64,
    delta: f64,
    schedule: &Schedule,
    scheme: Scheme,
    rng: &mut R,
) -> Result<HittingTime> {
    check_delta(delta)?;
    check_initial(x0)?;
    if scheme == Scheme::Lamperti {
        return Err(param("scheme", "lamperti paths never reach zero"));
    }
    let stepper = Stepper::new(scheme, delta);
    let bridge_key = rng.next_u64();
    let mut rho = x0;
    let mut node = 0;
    if x0 == 0.0 {
        return Ok(HittingTime {
            level: 0.0,
            time: schedule.segments()[0].t0(),
            node: Some(0),
        });
    }
    for g in schedule.segments() {
        let (dt, sd) = (g.dt(), g.dt().sqrt());
        for k in 1..=g.n_steps() {
            let u = keyed_uniform(bridge_key, node as u64);
            let s = if scheme == Scheme::ExactSquare {
                let next = sample_besq_exact(rho * rho, delta, dt, rng)?.sqrt();
                Step {
                    next,
                    hit: stepper.bridge_touches(rho, next, dt, u),
                    floored: false,
                }
            } else {
                let z: f64 = rng.sample(StandardNormal);
                stepper.step(rho, sd * z, dt, u)
            };
            node += 1;
            if s.hit {
                return Ok(HittingTime {
                    level: 0.0,
                    time: g.node(k),
                    node: Some(node),
                });
            }
            if !s.next.is_finite() {
                return Err(Error::NonFinite {
                    step: node - 1,
                    time: g.node(k),
                });
            }
            rho = s.next;
        }
    }
    Ok(HittingTime {
        level: 0.0,
        time: f64::INFINITY,
        node: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::{NoisePath, Scheme, StopMode, TimeGrid};

    fn path_from(values: Vec<f64>) -> BesselPath {
        let n = values.len() - 1;
        let g = TimeGrid::horizon(n as f64, n).unwrap();
        let w = NoisePath::from_increments(g.into(), vec![0.0; n]).unwrap();
        let mut p = crate::sde::simulate_bes(1.0, 3.0, &w, Scheme::EulerFloor, StopMode::Free).unwrap();
        p.x0 = values[0];
        p.values = values;
        p
    }

    #[test]
    fn never_crossed_is_infinite() {
        let p = path_from(vec![2.0, 2.0, 2.0]);
        let h = hitting_time(&p, 1.0);
        assert!(h.time.is_infinite());
        assert_eq!(h.node, None);
    }

    #[test]
    fn starting_at_level_is_t0() {
        let p = path_from(vec![0.5, 2.0, 0.1]);
        assert_eq!(hitting_time(&p, 0.5).time, 0.0);
    }

    #[test]
    fn interpolates_linearly() {
        let p = path_from(vec![2.0, 1.0, 0.0]);
        let h = hitting_time(&p, 0.5);
        assert!((h.time - 1.5).abs() < 1e-12);
        assert_eq!(h.node, Some(2));
        assert!(p.values()[h.node.unwrap()] <= 0.5);
    }

    #[test]
    fn last_passage_finds_final_crossing() {
        let p = path_from(vec![0.0, 2.0, 0.5, 3.0, 4.0]);
        let l = last_passage(&p, 1.0).unwrap();
        assert!((l - 2.2).abs() < 1e-12);
        assert!(last_passage(&p, 10.0).is_none());
    }

    #[test]
    fn streaming_zero_matches_stopped_path() {
        use crate::sde::{simulate_bes, StreamSeed};
        let sched = Schedule::geometric(0.25, 2.0, 64.0, 256).unwrap();
        let seed = StreamSeed::new(9);
        let mut seen = 0;
        for i in 0..40 {
            let w = NoisePath::sample(&sched, &mut seed.rng(i));
            let p = simulate_bes(0.5, 1.5, &w, Scheme::ImplicitDrift, StopMode::StoppedAtZero).unwrap();
            let h = first_zero(0.5, 1.5, &sched, Scheme::ImplicitDrift, &mut seed.rng(i)).unwrap();
            assert_eq!(h.node, p.absorbed_at());
            if let Some(k) = h.node {
                assert_eq!(h.time, p.nodes()[k]);
                assert_eq!(hitting_time(&p, 0.0).time, h.time);
                seen += 1;
            }
        }
        assert!(seen > 20);
    }
}
