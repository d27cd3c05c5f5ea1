//! First zero for `1 < δ < 2`: the law of `τ₀(x)` and its regularity in `x`.

use rand::Rng;

use super::{per_path, ExperimentConfig, ExperimentReport};
use crate::error::Result;
use crate::laws::tau0_quantile;
use crate::sde::{first_zero, simulate_flow_adaptive, FlowBundle, Schedule, StopMode, StreamSeed};
use crate::stats::{moment_estimate, quantile_sorted, sorted, StatReport};

/// Coupled stopped flow from `x` and `x(1 + g)` for each gap, stepped
/// adaptively until every path has hit zero.
pub(super) fn first_zero_flow<R: Rng + ?Sized>(cfg: &ExperimentConfig, x: f64, rng: &mut R) -> Result<FlowBundle> {
    let mut xs = vec![x];
    let mut gaps = cfg.scales.clone();
    gaps.sort_by(f64::total_cmp);
    xs.extend(gaps.iter().map(|g| x * (1.0 + g)));
    simulate_flow_adaptive(&xs, cfg.delta, cfg.scheme, StopMode::StoppedAtZero, cfg.step_control(), rng)
}

/// Median that tolerates `±∞` entries.
pub(super) fn extended_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Block schedule from `x²/2` doubling to `horizon·x²`; for different `x`
/// these are exact rescalings of one another.
fn scaled_schedule(cfg: &ExperimentConfig, x: f64) -> Result<Schedule> {
    Schedule::geometric(0.5 * x * x, 2.0, cfg.horizon * x * x, cfg.block_steps)
}

/// Hitting times of zero from `x`, capped at the schedule's end.
fn hitting_times(cfg: &ExperimentConfig, x: f64, n: usize, label: &str) -> Result<(Vec<f64>, usize)> {
    let schedule = scaled_schedule(cfg, x)?;
    let cap = schedule.t_end();
    let streams = StreamSeed::new(cfg.seed).derive(label);
    let times = per_path(n, |i| {
        Ok(first_zero(x, cfg.delta, &schedule, cfg.scheme, &mut streams.rng(i as u64))?.time)
    })?;
    let censored = times.iter().filter(|t| !t.is_finite()).count();
    Ok((times.into_iter().map(|t| t.min(cap)).collect(), censored))
}

pub(super) fn tau0_law(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let mut xs = cfg.xs.clone();
    xs.sort_by(f64::total_cmp);
    let reference = xs[xs.len() / 2];
    let (times, censored) = hitting_times(cfg, reference, cfg.n_paths, "tau0-reference")?;
    if censored > 0 {
        report.flag(format!("{censored} of {} paths from x = {reference} still alive at the horizon", times.len()));
    }
    let s = sorted(&times)?;
    let mut worst: f64 = 0.0;
    let mut deciles = StatReport::check("deciles of τ₀ within 5% of the gamma law", 0.0, 0.05, true);
    for k in 1..=9 {
        let q = k as f64 / 10.0;
        let sim = quantile_sorted(&s, q);
        let exact = tau0_quantile(reference, cfg.delta, q)?;
        let rel = sim / exact - 1.0;
        worst = worst.max(rel.abs());
        deciles = deciles.metric(format!("rel_err_q{k}"), rel);
    }
    deciles.statistic = worst;
    deciles.passed = worst <= 0.05;
    report.check(deciles.with_sizes(vec![times.len()]).metric("x", reference));

    // Moment scaling, with moments of τ₀ ∧ (horizon·x²) on rescaled schedules.
    let gamma = cfg.gamma;
    let base = moment_estimate(&times, gamma, Some((0.0, 1.0 - 0.5 * cfg.delta)), cfg.seed)?;
    if let Some(w) = &base.warning {
        report.flag(format!("{w}; comparing moments of τ₀ capped at horizon·x²"));
    }
    let base_powered: Vec<f64> = times.iter().map(|t| t.powf(gamma)).collect();
    for (k, &x) in xs.iter().enumerate().filter(|(_, &x)| x != reference) {
        let (other, censored) = hitting_times(cfg, x, cfg.aux_paths, &format!("tau0-moment-{k}"))?;
        if censored > 0 {
            report.flag(format!("{censored} of {} paths from x = {x} still alive at the horizon", other.len()));
        }
        let powered: Vec<f64> = other.iter().map(|t| t.powf(gamma)).collect();
        let ratio = crate::stats::mean(&powered) / crate::stats::mean(&base_powered);
        let ci = bootstrap_ratio_ci(&powered, &base_powered, cfg.seed ^ k as u64)?;
        let expected = (x / reference).powf(2.0 * gamma);
        report.check(
            StatReport::check(
                &format!("E τ₀({x})^γ / E τ₀({reference})^γ = (x ratio)^(2γ)"),
                ratio,
                expected,
                ci.0 <= expected && expected <= ci.1,
            )
            .with_ci(ci.0, ci.1)
            .with_sizes(vec![other.len(), times.len()])
            .metric("gamma", gamma)
            .metric("expected", expected),
        );
    }
    report.diagnostic(
        StatReport::check("E τ₀^γ at the reference point", base.value, 0.0, true)
            .with_ci(base.ci.0, base.ci.1)
            .metric("gamma", gamma),
    );
    Ok(report)
}

/// Percentile bootstrap for `mean(a)/mean(b)`, independent resampling.
fn bootstrap_ratio_ci(a: &[f64], b: &[f64], seed: u64) -> Result<(f64, f64)> {
    let mut rng = StreamSeed::new(seed).derive("ratio-bootstrap").rng(0);
    let mut resample = |v: &[f64]| -> f64 {
        let n = v.len();
        (0..n).map(|_| v[rng.random_range(0..n)]).sum::<f64>() / n as f64
    };
    let ratios: Vec<f64> = (0..crate::stats::BOOTSTRAP_RESAMPLES)
        .map(|_| resample(a) / resample(b))
        .collect();
    let s = sorted(&ratios)?;
    Ok((quantile_sorted(&s, 0.025), quantile_sorted(&s, 0.975)))
}

pub(super) fn tau_derivative(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let x = cfg.xs[0];
    let mut gaps = cfg.scales.clone();
    gaps.sort_by(f64::total_cmp);
    let streams = StreamSeed::new(cfg.seed).derive("tau-derivative");
    let runs = per_path(cfg.n_paths, |i| {
        let b = first_zero_flow(cfg, x, &mut streams.rng(i as u64))?;
        // τ₀(y) − τ₀(x) summed from the step lengths: it can be far below ulp(τ₀(x)).
        let steps = b.path(0).steps();
        let base = b.path(0).absorbed_at();
        let lags: Vec<f64> = b.paths()[1..]
            .iter()
            .map(|p| match (base, p.absorbed_at()) {
                (Some(k0), Some(k)) => steps[k0..k].iter().sum(),
                _ => f64::INFINITY,
            })
            .collect();
        Ok((lags, b.truncated(), b.order_violations()))
    })?;
    let truncated = runs.iter().filter(|r| r.1).count();
    if truncated > 0 {
        report.flag(format!("{truncated} runs stopped before every path hit zero"));
    }
    let violations: usize = runs.iter().map(|r| r.2).sum();
    if violations > 0 {
        report.flag(format!("{violations} order violations repaired"));
    }
    // Largest gap first: the ladder shrinks y − x.
    let mut second = Vec::new();
    let mut first = Vec::new();
    for (j, &g) in gaps.iter().enumerate().rev() {
        let dy = x * g;
        let d: Vec<f64> = runs.iter().map(|r| r.0[j]).collect();
        second.push(extended_median(&d.iter().map(|v| v / (dy * dy)).collect::<Vec<_>>()));
        first.push(extended_median(&d.iter().map(|v| v / dy).collect::<Vec<_>>()));
    }
    let decreasing = second.windows(2).all(|w| w[1] < w[0]);
    let mut check = StatReport::check(
        "median (τ₀(y)−τ₀(x))/(y−x)² strictly decreasing as y ↓ x",
        second[second.len() - 1],
        0.0,
        decreasing,
    )
    .with_sizes(vec![cfg.n_paths]);
    let mut diag = StatReport::check("median (τ₀(y)−τ₀(x))/(y−x) along the ladder", first[first.len() - 1], 0.0, true);
    for (k, &g) in gaps.iter().rev().enumerate() {
        check = check.metric(format!("median_at_gap_{g:e}"), second[k]);
        diag = diag.metric(format!("median_at_gap_{g:e}"), first[k]);
    }
    report.check(check);
    report.diagnostic(diag);
    Ok(report)
}
