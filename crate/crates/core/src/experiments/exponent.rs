//! Exponent limits of the flow derivatives at the singular point.
//!
//! For `δ > 2`, `∂ⁿρ^x_t ≙ x^{1−n} ∂ⁿρ¹_{t/x²}`, so one path from 1 read at
//! the times `t/x²` gives the whole ladder of `x`. For `1 < δ < 2` the
//! derivative of `ρ^y` is read at `τ₀(x)` on a coupled flow as `y ↓ x`.

use super::tau::{extended_median, first_zero_flow};
use super::{per_path, ExperimentConfig, ExperimentReport};
use crate::error::{Error, Result};
use crate::flow::{variational_stack, variational_stack_at};
use crate::laws::n_delta;
use crate::sde::{simulate_bes, simulate_bes_clock, BesselPath, NoisePath, Schedule, Scheme, StopMode, StreamSeed};
use crate::stats::{slope_fit, StatReport};

/// Tolerance on the fitted exponent.
const SLOPE_TOLERANCE: f64 = 0.3;

/// Doubling blocks from 1 through every readout time.
pub(super) fn readout_schedule(readouts: &[f64], block_steps: usize) -> Result<Schedule> {
    let horizon = readouts.iter().cloned().fold(1.0, f64::max);
    let mut ends = vec![1.0];
    while *ends.last().unwrap() < horizon {
        ends.push(2.0 * ends.last().unwrap());
    }
    ends.extend(readouts.iter().filter(|&&t| t > 1.0));
    ends.sort_by(f64::total_cmp);
    ends.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
    Schedule::through(&ends, block_steps)
}

/// Paths from 1 with a node at every readout time: Lamperti paths in their
/// own clock, or a time-stepped scheme on doubling blocks.
pub(super) struct UnitPaths {
    readouts: Vec<f64>,
    schedule: Option<Schedule>,
}

impl UnitPaths {
    pub fn new(cfg: &ExperimentConfig, readouts: &[f64]) -> Result<Self> {
        let mut r = readouts.to_vec();
        r.sort_by(f64::total_cmp);
        r.dedup();
        let schedule = match cfg.scheme {
            Scheme::Lamperti => None,
            _ => Some(readout_schedule(&r, cfg.block_steps)?),
        };
        Ok(Self { readouts: r, schedule })
    }

    pub fn t_end(&self) -> f64 {
        match &self.schedule {
            Some(s) => s.t_end(),
            None => self.readouts[self.readouts.len() - 1],
        }
    }

    pub fn path(&self, cfg: &ExperimentConfig, streams: StreamSeed, i: usize) -> Result<BesselPath> {
        let mut rng = streams.rng(i as u64);
        let Some(schedule) = &self.schedule else {
            let p = simulate_bes_clock(1.0, cfg.delta, &self.readouts, cfg.clock_control(), &mut rng)?;
            if p.nodes()[p.len() - 1] < self.t_end() {
                return Err(Error::Param {
                    name: "max_steps",
                    reason: format!("path {i} used {} clock steps before t = {:e}", cfg.max_steps, self.t_end()),
                });
            }
            return Ok(p);
        };
        let w = NoisePath::sample(schedule, &mut rng);
        simulate_bes(1.0, cfg.delta, &w, cfg.scheme, StopMode::Free)
    }
}

/// `x^{1−n} ∂ⁿρ¹_{t/x²}` for each ladder value, one path.
fn ladder_derivatives(cfg: &ExperimentConfig, paths: &UnitPaths, streams: StreamSeed, i: usize) -> Result<Vec<f64>> {
    let p = paths.path(cfg, streams, i)?;
    let stack = variational_stack(&p, cfg.order, paths.t_end())?;
    let d = stack.drho(cfg.order);
    Ok(cfg
        .xs
        .iter()
        .map(|&x| {
            let k = p.index_at_or_before(cfg.time / (x * x) * (1.0 + 1e-12));
            x.powi(1 - cfg.order as i32) * d[k]
        })
        .collect())
}

pub(super) fn exponent(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let threshold = n_delta(cfg.delta)?;
    let expected = threshold.n_delta - cfg.order as f64;
    if cfg.delta > 2.0 {
        small_x(cfg, expected)
    } else {
        first_zero(cfg, expected)
    }
}

fn small_x(cfg: &ExperimentConfig, expected: f64) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let readouts: Vec<f64> = cfg.xs.iter().map(|x| cfg.time / (x * x)).collect();
    let paths = UnitPaths::new(cfg, &readouts)?;
    let streams = StreamSeed::new(cfg.seed).derive("exponent-ladder");
    let values = per_path(cfg.n_paths, |i| ladder_derivatives(cfg, &paths, streams, i))?;
    let points: Vec<(f64, f64)> = cfg
        .xs
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let logs: Vec<f64> = values.iter().map(|v| v[j].abs().ln()).collect();
            (x.ln(), extended_median(&logs))
        })
        .collect();
    let fit = slope_fit(&points)?;
    report.check(slope_check(cfg, &fit, expected, "ln x"));
    Ok(report)
}

fn first_zero(cfg: &ExperimentConfig, expected: f64) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let x = cfg.xs[0];
    let streams = StreamSeed::new(cfg.seed).derive("exponent-first-zero");
    let n_gaps = cfg.scales.len();
    let runs = per_path(cfg.n_paths, |i| {
        let b = first_zero_flow(cfg, x, &mut streams.rng(i as u64))?;
        let mut out = Vec::with_capacity(n_gaps);
        let Some(kx) = b.path(0).absorbed_at() else {
            return Ok((vec![(f64::NAN, f64::NAN); n_gaps], true, b.order_violations()));
        };
        for j in 1..=n_gaps {
            let p = b.path(j);
            let rho = p.values()[kx];
            if rho == 0.0 {
                // Absorbed in the same step as x.
                out.push((f64::NEG_INFINITY, f64::NEG_INFINITY));
                continue;
            }
            let stack = variational_stack_at(p, cfg.order, kx)?;
            let k = stack.len() - 1;
            out.push((rho.ln(), stack.drho(cfg.order)[k].abs().ln()));
        }
        Ok((out, b.truncated(), b.order_violations()))
    })?;
    let unresolved = runs.iter().filter(|r| r.1).count();
    if unresolved > 0 {
        report.flag(format!("{unresolved} runs ended before x hit zero"));
    }
    let violations: usize = runs.iter().map(|r| r.2).sum();
    if violations > 0 {
        report.flag(format!("{violations} order violations repaired"));
    }
    let resolved: Vec<_> = runs.iter().filter(|r| !r.1).collect();
    let mut points = Vec::with_capacity(n_gaps);
    let mut coalesced = Vec::with_capacity(n_gaps);
    for j in 0..n_gaps {
        let lr: Vec<f64> = resolved.iter().map(|r| r.0[j].0).collect();
        let ld: Vec<f64> = resolved.iter().map(|r| r.0[j].1).collect();
        coalesced.push(lr.iter().filter(|v| v.is_infinite()).count() as f64 / lr.len() as f64);
        points.push((extended_median(&lr), extended_median(&ld)));
    }
    let mut check = match slope_fit(&points) {
        Ok(fit) => slope_check(cfg, &fit, expected, "ln ρ^y at τ₀(x)"),
        Err(e) => StatReport::check("exponent slope", f64::NAN, expected, false).note(e.to_string()),
    };
    let mut gaps = cfg.scales.clone();
    gaps.sort_by(f64::total_cmp);
    for (g, c) in gaps.iter().zip(&coalesced) {
        check = check.metric(format!("coalesced_at_gap_{g:e}"), *c);
    }
    report.check(check.with_sizes(vec![resolved.len()]));
    Ok(report)
}

fn slope_check(cfg: &ExperimentConfig, fit: &crate::stats::SlopeFit, expected: f64, against: &str) -> StatReport {
    let mut r = StatReport::check(
        &format!("slope of median ln|∂^{}ρ| against {against}", cfg.order),
        fit.slope,
        expected,
        (fit.slope - expected).abs() <= SLOPE_TOLERANCE,
    )
    .with_sizes(vec![cfg.n_paths])
    .metric("expected", expected)
    .metric("stderr", fit.stderr)
    .metric("intercept", fit.intercept);
    for (k, (a, o)) in fit.abscissae.iter().zip(&fit.ordinates).enumerate() {
        r = r.metric(format!("point_{k}_abscissa"), *a).metric(format!("point_{k}_ordinate"), *o);
    }
    r
}
