//! Path constructions around `τ₀(x)`: time reversal and the restart at zero.

use super::{per_path, ExperimentConfig, ExperimentReport};
use crate::error::Result;
use crate::sde::{
    simulate_bes, simulate_bes_exact, simulate_bes_to_escape, BesselPath, NoisePath, PathRng, Schedule, Scheme, StopMode,
    StreamSeed, TimeGrid,
};
use crate::stats::{ks_two_sample, StatReport};

/// One path on `schedule`, from exact transitions or from the configured scheme.
fn single_path(
    cfg: &ExperimentConfig,
    x0: f64,
    delta: f64,
    schedule: &Schedule,
    mode: StopMode,
    rng: &mut PathRng,
) -> Result<BesselPath> {
    if cfg.scheme == Scheme::ExactSquare {
        simulate_bes_exact(x0, delta, schedule, mode, rng)
    } else {
        simulate_bes(x0, delta, &NoisePath::sample(schedule, rng), cfg.scheme, mode)
    }
}

/// Dual paths stop once a return to `x` has this probability.
const ESCAPE_RETURN_CHANCE: f64 = 1e-4;

pub(super) fn time_reversal(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let x = cfg.xs[0];
    let dual = 4.0 - cfg.delta;
    let seed = StreamSeed::new(cfg.seed);

    // ρ^{x,δ}_{τ₀(x) − qτ₀(x)}, read on the stopped path.
    let forward = Schedule::geometric(0.5 * x * x, 2.0, cfg.horizon * x * x, cfg.block_steps)?;
    let fs = seed.derive("reversal-forward");
    let reversed = per_path(cfg.n_paths, |i| {
        let p = single_path(cfg, x, cfg.delta, &forward, StopMode::StoppedAtZero, &mut fs.rng(i as u64))?;
        Ok(p.absorbed_at().map(|k| {
            let tau = p.nodes()[k];
            cfg.fractions.iter().map(|q| p.value_at((1.0 - q) * tau)).collect::<Vec<f64>>()
        }))
    })?;

    // BES^0(4−δ) at q·L(x), L(x) its last passage at x. Coarse time steps
    // late in the path miss short returns to x, so the dual runs in its clock.
    let bs = seed.derive("reversal-dual");
    let dual_values = per_path(cfg.n_paths, |i| {
        let escape = simulate_bes_to_escape(dual, x, ESCAPE_RETURN_CHANCE, cfg.clock_control(), &mut bs.rng(i as u64))?;
        Ok(escape.map(|e| {
            cfg.fractions.iter().map(|q| e.path.value_at(q * e.last_passage)).collect::<Vec<f64>>()
        }))
    })?;

    let forward_ok: Vec<&Vec<f64>> = reversed.iter().flatten().collect();
    let dual_ok: Vec<&Vec<f64>> = dual_values.iter().flatten().collect();
    let (lost_f, lost_b) = (reversed.len() - forward_ok.len(), dual_values.len() - dual_ok.len());
    if lost_f > 0 {
        report.flag(format!("{lost_f} forward paths did not reach zero by the horizon"));
    }
    if lost_b > 0 {
        report.flag(format!("{lost_b} dual paths had not escaped level x within the step cap"));
    }
    for (j, q) in cfg.fractions.iter().enumerate() {
        let a: Vec<f64> = forward_ok.iter().map(|v| v[j]).collect();
        let b: Vec<f64> = dual_ok.iter().map(|v| v[j]).collect();
        report.check(
            ks_two_sample(&a, &b)?
                .named(format!("ρ at τ₀ − qτ₀ vs BES^0({dual}) at qL(x), q = {q}"))
                .metric("q", *q),
        );
    }
    Ok(report)
}

/// `ρ̃^x_t`: the stopped path before `τ₀(x)`, then an independent `BES^0(δ)`
/// started at `τ₀(x)`. Also returns the value obtained by reading the
/// restart as `ρ⁰_t − ρ⁰_{τ₀(x)}` on one independent path from 0.
pub(crate) fn modified_value(
    x: f64,
    delta: f64,
    t: f64,
    n_steps: usize,
    scheme: crate::sde::Scheme,
    rng: &mut crate::sde::PathRng,
) -> Result<(f64, Option<f64>)> {
    let grid = Schedule::uniform(TimeGrid::horizon(t, n_steps)?);
    let w = NoisePath::sample(&grid, rng);
    let p = simulate_bes(x, delta, &w, scheme, StopMode::StoppedAtZero)?;
    let Some(k) = p.absorbed_at() else {
        return Ok((p.terminal(), None));
    };
    let tau = p.nodes()[k];
    let restart = t - tau;
    if restart <= 0.0 {
        return Ok((0.0, Some(0.0)));
    }
    let dt = t / n_steps as f64;
    let steps = ((restart / dt).ceil() as usize).max(1);
    let w0 = NoisePath::sample(&Schedule::uniform(TimeGrid::horizon(restart, steps)?), rng);
    let shifted = simulate_bes(0.0, delta, &w0, scheme, StopMode::Free)?.terminal();
    let w1 = NoisePath::sample(&grid, rng);
    let zero = simulate_bes(0.0, delta, &w1, scheme, StopMode::Free)?;
    Ok((shifted, Some(zero.terminal() - zero.value_at(tau))))
}

pub(super) fn modification(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let x = cfg.xs[0];
    let t = cfg.time;
    let seed = StreamSeed::new(cfg.seed);
    let ms = seed.derive("modification-built");
    let built = per_path(cfg.n_paths, |i| {
        modified_value(x, cfg.delta, t, cfg.n_steps, cfg.scheme, &mut ms.rng(i as u64))
    })?;
    let grid = Schedule::uniform(TimeGrid::horizon(t, cfg.n_steps)?);
    let ds = seed.derive("modification-direct");
    let direct = per_path(cfg.n_paths, |i| {
        let w = NoisePath::sample(&grid, &mut ds.rng(i as u64));
        Ok(simulate_bes(x, cfg.delta, &w, cfg.scheme, StopMode::Free)?.terminal())
    })?;
    let restarted = built.iter().filter(|b| b.1.is_some()).count() as f64 / built.len() as f64;
    let values: Vec<f64> = built.iter().map(|b| b.0).collect();
    report.check(
        ks_two_sample(&values, &direct)?
            .named(format!("ρ̃^x_t vs ρ^x_t at t = {t}"))
            .metric("restarted_fraction", restarted),
    );
    // The same construction with the restart read as ρ⁰_t − ρ⁰_{τ₀} on one path from 0.
    let literal: Vec<f64> = built.iter().map(|b| b.1.map_or(b.0, |v| v)).collect();
    let negative = literal.iter().filter(|&&v| v < 0.0).count() as f64 / literal.len() as f64;
    report.diagnostic(
        ks_two_sample(&literal, &direct)?
            .named("restart read as an increment of one path from 0")
            .metric("negative_fraction", negative),
    );
    if restarted == 0.0 {
        report.check(StatReport::check("some paths restart before t", 0.0, 0.0, false));
    }
    Ok(report)
}
