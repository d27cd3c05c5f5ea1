//! Dimension two: `(ln x)⁻² ∫₀^t (ρ^x)⁻²` against the first passage time `T₁`.
//!
//! By scaling `∫₀^t (ρ^x_s)⁻² ds ≙ ∫₀^{t/x²} (ρ¹_u)⁻² du`, so one path from 1
//! read at the times `t/x²` serves the whole ladder. The default Lamperti
//! representation makes the integral the path's own clock; time-stepped
//! schemes drift in `ln ρ` by an amount proportional to that clock, which
//! shows up as a thin upper tail.

use super::{per_path, ExperimentConfig, ExperimentReport};
use crate::error::Result;
use crate::flow::integral_inverse_square;
use crate::laws::t1_cdf;
use crate::sde::{simulate_bes, simulate_bes_clock, NoisePath, Schedule, Scheme, StopMode, StreamSeed};
use crate::stats::{ks_one_sample_censored, median, StatReport};

/// Block ends `10^{k/4}` from 1 up to `horizon`, with every readout a block end.
pub(super) fn quarter_decade_schedule(horizon: f64, block_steps: usize) -> Result<Schedule> {
    let mut ends = vec![1.0];
    let mut k = 1;
    while *ends.last().unwrap() < horizon * (1.0 - 1e-12) {
        ends.push(10f64.powf(k as f64 / 4.0).min(horizon));
        k += 1;
    }
    Schedule::through(&ends, block_steps)
}

/// `∫₀^{t_j} ρ⁻²` along one path from 1 at each readout, `None` past the end of a capped run.
fn clock_integrals(cfg: &ExperimentConfig, readouts: &[f64]) -> Result<Vec<Vec<Option<f64>>>> {
    let streams = StreamSeed::new(cfg.seed).derive("spitzer");
    if cfg.scheme == Scheme::Lamperti {
        let control = cfg.clock_control();
        return per_path(cfg.n_paths, |i| {
            let p = simulate_bes_clock(1.0, cfg.delta, readouts, control, &mut streams.rng(i as u64))?;
            let running = integral_inverse_square(&p, f64::INFINITY);
            let t_end = p.nodes()[p.len() - 1];
            Ok(readouts
                .iter()
                .map(|&t| (t <= t_end).then(|| running[p.index_at_or_before(t)]))
                .collect())
        });
    }
    let horizon = readouts[readouts.len() - 1];
    let schedule = quarter_decade_schedule(horizon, cfg.block_steps)?;
    per_path(cfg.n_paths, |i| {
        let w = NoisePath::sample(&schedule, &mut streams.rng(i as u64));
        let p = simulate_bes(1.0, cfg.delta, &w, cfg.scheme, StopMode::Free)?;
        let running = integral_inverse_square(&p, horizon);
        Ok(readouts
            .iter()
            .map(|&t| Some(running[p.index_at_or_before(t * (1.0 + 1e-12))]))
            .collect())
    })
}

pub(super) fn spitzer(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let mut ladder = cfg.xs.clone();
    ladder.sort_by(|a, b| b.total_cmp(a));
    let readouts: Vec<f64> = ladder.iter().map(|x| cfg.time / (x * x)).collect();
    let integrals = clock_integrals(cfg, &readouts)?;

    let mut distances = Vec::new();
    for (j, &x) in ladder.iter().enumerate() {
        let l2 = x.ln().powi(2);
        let normalized: Vec<f64> = integrals.iter().filter_map(|v| v[j]).map(|i| i / l2).collect();
        let censored = cfg.n_paths - normalized.len();
        if censored > 0 {
            report.flag(format!("{censored} runs stopped by the step cap before t = {:e}", readouts[j]));
        }
        let ks = ks_one_sample_censored(&normalized, censored, t1_cdf)?;
        distances.push(ks.statistic);
        report.diagnostic(ks.named(format!("normalized integral vs T₁ at x = {x:e}")).metric("x", x));
    }
    let non_increasing = distances.windows(2).all(|w| w[1] <= w[0]);
    let mut seq = StatReport::check(
        "KS distance non-increasing along the ladder",
        distances[distances.len() - 1] - distances[0],
        0.0,
        non_increasing,
    );
    for (x, d) in ladder.iter().zip(&distances) {
        seq = seq.metric(format!("ks_at_{x:e}"), *d);
    }
    report.check(seq.with_sizes(vec![cfg.n_paths]));
    let last = distances[distances.len() - 1];
    report.check(
        StatReport::check("final KS distance", last, 0.1, last < 0.1)
            .metric("x", ladder[ladder.len() - 1]),
    );
    // ln Y / ln x = ((δ−1)/2)·∫ρ⁻²/|ln x| grows without bound.
    // Capped runs count as +∞, which the median tolerates while they are a minority.
    let x = ladder[ladder.len() - 1];
    let scaled: Vec<f64> = integrals
        .iter()
        .map(|v| v[v.len() - 1].map_or(f64::MAX, |i| i / x.ln().abs()))
        .collect();
    let m = median(&scaled)?;
    report.check(
        StatReport::check("median ∫ρ⁻²/|ln x| at the smallest x", m, 10.0, m > 10.0)
            .metric("median_log_ratio", 0.5 * (cfg.delta - 1.0) * m),
    );
    Ok(report)
}
