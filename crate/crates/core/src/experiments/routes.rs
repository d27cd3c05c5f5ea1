//! Checks with an exact or two-route oracle: the Bell structure, the two
//! derivative routes, the exact marginal law and the Dufresne identity.

use super::{per_path, ExperimentConfig, ExperimentReport};
use crate::error::Result;
use crate::flow::{bell_polynomials, increment_ratio, partition_coefficients, variational_stack};
use crate::laws::{sample_dufresne_u1, u1_cdf, DufresneIndex, DufresneRoute};
use crate::sde::{sample_besq_exact, simulate_bes, simulate_flow, NoisePath, Schedule, StopMode, StreamSeed, TimeGrid};
use crate::stats::{ks_one_sample, ks_two_sample, median, StatReport};

pub(super) fn bell_symbolic(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let polys = bell_polynomials(cfg.order);
    for (n, p) in polys.iter().enumerate().skip(1) {
        let oracle = partition_coefficients(n);
        let mismatches = oracle
            .iter()
            .filter(|(idx, &c)| p.coefficient(idx) != c)
            .count()
            + p.terms().keys().filter(|k| !oracle.contains_key(*k)).count();
        let bell_number: i64 = p.terms().values().sum();
        report.check(
            StatReport::check(&format!("coefficients of P_{n}"), mismatches as f64, 0.0, mismatches == 0)
                .metric("terms", p.terms().len() as f64)
                .metric("bell_number", bell_number as f64),
        );
    }
    Ok(report)
}

struct DualRouteSample {
    stack_gaps: Vec<f64>,
    ratio_gap_coarse: f64,
    ratio_gap_fine: f64,
    violations: usize,
}

pub(super) fn dual_route(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let (x, y) = (cfg.xs[0], cfg.xs[cfg.xs.len() - 1]);
    let fine_grid = Schedule::uniform(TimeGrid::horizon(cfg.horizon, 2 * cfg.n_steps)?);
    let streams = StreamSeed::new(cfg.seed).derive("dual-route");
    let samples = per_path(cfg.n_paths, |i| {
        let fine = NoisePath::sample(&fine_grid, &mut streams.rng(i as u64));
        let coarse = fine.coarsen(2)?;
        let bc = simulate_flow(&cfg.xs, cfg.delta, &coarse, cfg.scheme, StopMode::Free)?;
        let bf = simulate_flow(&cfg.xs, cfg.delta, &fine, cfg.scheme, StopMode::Free)?;
        let stack = variational_stack(bc.path(0), cfg.order, cfg.horizon)?;
        let terminal_gap = |b: &crate::sde::FlowBundle| -> Result<f64> {
            let r = increment_ratio(b, x, y, cfg.horizon)?;
            let raw = r.raw.as_ref().map_or(f64::NAN, |v| v[v.len() - 1]);
            let z = r.closed_form[r.closed_form.len() - 1];
            Ok((raw / z - 1.0).abs())
        };
        Ok(DualRouteSample {
            stack_gaps: stack.terminal_gaps().to_vec(),
            ratio_gap_coarse: terminal_gap(&bc)?,
            ratio_gap_fine: terminal_gap(&bf)?,
            violations: bc.order_violations(),
        })
    })?;
    let n = samples.len() as f64;
    let tol = crate::flow::ROUTE_TOLERANCE;
    for order in 1..=cfg.order {
        let agree = samples.iter().filter(|s| s.stack_gaps[order - 1] <= tol).count() as f64 / n;
        let gaps: Vec<f64> = samples.iter().map(|s| s.stack_gaps[order - 1]).collect();
        report.check(
            StatReport::check(&format!("routes agree for ∂^{order}ρ"), agree, 0.95, agree >= 0.95)
                .with_sizes(vec![samples.len()])
                .metric("median_gap", median(&gaps)?)
                .metric("max_gap", gaps.iter().cloned().fold(0.0, f64::max)),
        );
    }
    let coarse: Vec<f64> = samples.iter().map(|s| s.ratio_gap_coarse).collect();
    let fine: Vec<f64> = samples.iter().map(|s| s.ratio_gap_fine).collect();
    let within = coarse.iter().filter(|&&g| g <= tol).count() as f64 / n;
    report.check(
        StatReport::check("increment ratio matches closed form", within, 0.95, within >= 0.95)
            .with_sizes(vec![samples.len()])
            .metric("median_gap", median(&coarse)?),
    );
    let halving = median(&fine)? / median(&coarse)?;
    report.check(
        StatReport::check("ratio gap halves when steps double", halving, 0.5, (0.4..=0.6).contains(&halving))
            .metric("median_gap_coarse", median(&coarse)?)
            .metric("median_gap_fine", median(&fine)?),
    );
    let violations: usize = samples.iter().map(|s| s.violations).sum();
    if violations > 0 {
        report.flag(format!("{violations} order violations repaired"));
    }
    Ok(report)
}

pub(super) fn marginal(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let grid = Schedule::uniform(TimeGrid::horizon(cfg.horizon, cfg.n_steps)?);
    let sim_streams = StreamSeed::new(cfg.seed).derive("marginal-scheme");
    let exact_streams = StreamSeed::new(cfg.seed).derive("marginal-exact");
    for &x in &cfg.xs {
        let simulated = per_path(cfg.n_paths, |i| {
            let w = NoisePath::sample(&grid, &mut sim_streams.rng(i as u64));
            Ok(simulate_bes(x, cfg.delta, &w, cfg.scheme, StopMode::Free)?.terminal())
        })?;
        let exact = per_path(cfg.n_paths, |i| {
            Ok(sample_besq_exact(x * x, cfg.delta, cfg.horizon, &mut exact_streams.rng(i as u64))?.sqrt())
        })?;
        report.check(
            ks_two_sample(&simulated, &exact)?
                .named(format!("terminal law at x = {x}, δ = {}", cfg.delta)),
        );
    }
    Ok(report)
}

pub(super) fn dufresne(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let index = DufresneIndex::Flow;
    let nu = index.nu(cfg.delta)?;
    let route = DufresneRoute::Integral {
        horizon: cfg.horizon,
        n_steps: cfg.n_steps,
    };
    let int_streams = StreamSeed::new(cfg.seed).derive("dufresne-integral");
    let gam_streams = StreamSeed::new(cfg.seed).derive("dufresne-gamma");
    let integral = per_path(cfg.n_paths, |i| {
        sample_dufresne_u1(cfg.delta, index, route, &mut int_streams.rng(i as u64))
    })?;
    let gamma = per_path(cfg.n_paths, |i| {
        sample_dufresne_u1(cfg.delta, index, DufresneRoute::Gamma, &mut gam_streams.rng(i as u64))
    })?;
    report.check(ks_two_sample(&integral, &gamma)?.named("integral route vs gamma route"));
    if nu > 1.0 {
        let expected = 2.0 * (cfg.delta - 1.0) / (nu - 1.0);
        let mean = crate::stats::mean(&integral);
        let rel = (mean / expected - 1.0).abs();
        report.check(
            StatReport::check("mean of the integral route", rel, 0.05, rel <= 0.05)
                .with_sizes(vec![integral.len()])
                .metric("mean", mean)
                .metric("expected", expected),
        );
    }
    report.diagnostic(
        ks_one_sample(&integral, |u| u1_cdf(cfg.delta, nu, u).unwrap_or(f64::NAN))?
            .named("integral route vs closed-form cdf"),
    );
    Ok(report)
}
