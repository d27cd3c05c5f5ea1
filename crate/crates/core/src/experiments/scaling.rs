use super::{per_path, ExperimentConfig, ExperimentReport};
use crate::error::Result;
use crate::sde::{simulate_bes, NoisePath, Schedule, StopMode, StreamSeed, TimeGrid};
use crate::stats::ks_two_sample;

/// Terminal values of `ρ^x` on `[0, horizon]`, one path per stream.
fn terminals(cfg: &ExperimentConfig, x: f64, horizon: f64, streams: StreamSeed) -> Result<Vec<f64>> {
    let grid = Schedule::uniform(TimeGrid::horizon(horizon, cfg.n_steps)?);
    per_path(cfg.n_paths, |i| {
        let w = NoisePath::sample(&grid, &mut streams.rng(i as u64));
        Ok(simulate_bes(x, cfg.delta, &w, cfg.scheme, StopMode::Free)?.terminal())
    })
}

pub(super) fn scaling(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let x = cfg.xs[0];
    let t = cfg.time;
    let seed = StreamSeed::new(cfg.seed);
    for (k, &c) in cfg.scales.iter().enumerate() {
        let stretched: Vec<f64> = terminals(cfg, x, c * c * t, seed.derive("scaling-stretched").derive_index(k as u64))?
            .into_iter()
            .map(|v| v / c)
            .collect();
        let shrunk = terminals(cfg, x / c, t, seed.derive("scaling-shrunk").derive_index(k as u64))?;
        report.check(
            ks_two_sample(&stretched, &shrunk)?
                .named(format!("ρ^x_(c²t)/c vs ρ^(x/c)_t at c = {c}, δ = {}", cfg.delta))
                .metric("c", c),
        );
    }
    Ok(report)
}
