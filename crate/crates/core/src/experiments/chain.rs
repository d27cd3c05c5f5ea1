//! Ratio limits `x^{n−1}∂ⁿρ/∂ρ → U_{n−1}` and their moments.
//!
//! For `δ > 2`, `x^{n−1}∂ⁿρ^x_t/∂ρ^x_t = x^{n−1}P_{n−1}(h^x_t) ≙ P_{n−1}(h¹_{t/x²})`.
//! For `1 < δ < 2` the ratio `(ρ^y)^{n−1}∂ⁿρ^y/∂ρ^y` is read at `τ₀(x)` on a
//! coupled flow as `y ↓ x`, with `U₁` of index `ν = 5 − 2δ`.

use super::config::moment_index;
use super::exponent::UnitPaths;
use super::tau::{extended_median, first_zero_flow};
use super::{per_path, ExperimentConfig, ExperimentReport};
use crate::error::Result;
use crate::flow::{variational_stack, variational_stack_at};
use crate::laws::{sample_u1_with_index, u1_cdf, u_chain, DufresneRoute};
use crate::sde::StreamSeed;
use crate::stats::{ks_one_sample, ks_two_sample, moment_estimate, StatReport};

/// Ratios at the smallest `x` and readout times `t/x²`, one row per path.
fn small_x_ratios(cfg: &ExperimentConfig, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let x = cfg.xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let readouts: Vec<f64> = times.iter().map(|t| t / (x * x)).collect();
    let paths = UnitPaths::new(cfg, &readouts)?;
    let streams = StreamSeed::new(cfg.seed).derive("ratio-small-x");
    per_path(cfg.n_paths, |i| {
        let p = paths.path(cfg, streams, i)?;
        let stack = variational_stack(&p, cfg.order, paths.t_end())?;
        Ok(readouts
            .iter()
            .map(|&t| {
                let k = p.index_at_or_before(t * (1.0 + 1e-12));
                stack.drho(cfg.order)[k] / stack.y()[k]
            })
            .collect())
    })
}

/// `(ρ^y)^{n−1}∂ⁿρ^y/∂ρ^y` at `τ₀(x)` for each gap (ascending), one row per
/// resolved path; `0` when `y` hit zero in the same step as `x`.
fn first_zero_ratios(cfg: &ExperimentConfig) -> Result<(Vec<Vec<f64>>, usize)> {
    let x = cfg.xs[0];
    let n_gaps = cfg.scales.len();
    let streams = StreamSeed::new(cfg.seed).derive("ratio-first-zero");
    let rows = per_path(cfg.n_paths, |i| {
        let b = first_zero_flow(cfg, x, &mut streams.rng(i as u64))?;
        let Some(kx) = b.path(0).absorbed_at() else {
            return Ok(None);
        };
        let mut row = Vec::with_capacity(n_gaps);
        for j in 1..=n_gaps {
            let p = b.path(j);
            let rho = p.values()[kx];
            if rho == 0.0 {
                row.push(0.0);
                continue;
            }
            let stack = variational_stack_at(p, cfg.order, kx)?;
            let k = stack.len() - 1;
            row.push(rho.powi(cfg.order as i32 - 1) * stack.drho(cfg.order)[k] / stack.y()[k]);
        }
        Ok(Some(row))
    })?;
    let unresolved = rows.iter().filter(|r| r.is_none()).count();
    Ok((rows.into_iter().flatten().collect(), unresolved))
}

/// Draws of `U_{n−1}` through the gamma route.
fn chain_draws(cfg: &ExperimentConfig, nu: f64) -> Result<Vec<f64>> {
    let streams = StreamSeed::new(cfg.seed).derive("u-chain-gamma");
    per_path(cfg.n_paths, |i| {
        let u1 = sample_u1_with_index(cfg.delta, nu, DufresneRoute::Gamma, &mut streams.rng(i as u64))?;
        Ok(u_chain(u1, cfg.order - 1))
    })
}

fn law_check(cfg: &ExperimentConfig, ratios: &[f64], nu: f64, what: &str) -> Result<StatReport> {
    if cfg.order == 1 {
        let off = ratios.iter().filter(|&&r| (r - 1.0).abs() > 1e-12).count();
        return Ok(StatReport::check(&format!("{what} ≡ 1 for n = 1"), off as f64, 0.0, off == 0));
    }
    let r = if cfg.order == 2 {
        ks_one_sample(ratios, |u| u1_cdf(cfg.delta, nu, u).unwrap_or(f64::NAN))?
    } else {
        ks_two_sample(ratios, &chain_draws(cfg, nu)?)?
    };
    Ok(r.named(format!("{what} vs the law of U_{}", cfg.order - 1)).metric("nu", nu))
}

pub(super) fn ratio_chain(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let nu = moment_index(cfg.delta)?;
    if cfg.delta >= 2.0 {
        let ratios: Vec<f64> = small_x_ratios(cfg, &[cfg.time])?.into_iter().map(|r| r[0]).collect();
        report.check(law_check(cfg, &ratios, nu, "x^(n−1)∂ⁿρ/∂ρ at the smallest x")?);
        return Ok(report);
    }
    let (rows, unresolved) = first_zero_ratios(cfg)?;
    if unresolved > 0 {
        report.flag(format!("{unresolved} runs ended before x hit zero"));
    }
    let mut gaps = cfg.scales.clone();
    gaps.sort_by(f64::total_cmp);
    let smallest: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    report.check(law_check(cfg, &smallest, nu, "(ρ^y)^(n−1)∂ⁿρ^y/∂ρ^y at τ₀(x), smallest gap")?);
    let mut trend = StatReport::check("median ratio along the gap ladder", 0.0, 0.0, true);
    for (j, g) in gaps.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        trend = trend.metric(format!("median_at_gap_{g:e}"), extended_median(&col));
    }
    report.diagnostic(trend.with_sizes(vec![rows.len()]));
    Ok(report)
}

pub(super) fn moment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(cfg);
    let nu = moment_index(cfg.delta)?;
    let band = (cfg.order > 1).then(|| (0.0, nu / (cfg.order - 1) as f64));
    let samples: Vec<f64> = if cfg.delta >= 2.0 {
        // Discrete sup over t ∈ {ε, (ε+T)/2, T}.
        let times = [cfg.epsilon, 0.5 * (cfg.epsilon + cfg.time), cfg.time];
        small_x_ratios(cfg, &times)?
            .into_iter()
            .map(|r| r.iter().map(|v| v.abs()).fold(0.0, f64::max))
            .collect()
    } else {
        let (rows, unresolved) = first_zero_ratios(cfg)?;
        if unresolved > 0 {
            report.flag(format!("{unresolved} runs ended before x hit zero"));
        }
        rows.into_iter().map(|r| r[0].abs()).collect()
    };
    let simulated = moment_estimate(&samples, cfg.gamma, band, cfg.seed)?;
    let oracle = moment_estimate(&chain_draws(cfg, nu)?, cfg.gamma, band, cfg.seed.wrapping_add(1))?;
    if let Some(w) = &simulated.warning {
        report.flag(w.clone());
    }
    report.check(
        StatReport::check(
            "γ-moment CI overlaps the U-chain CI",
            simulated.value,
            oracle.value,
            simulated.overlaps(&oracle),
        )
        .with_ci(simulated.ci.0, simulated.ci.1)
        .with_sizes(vec![simulated.n, oracle.n])
        .metric("oracle", oracle.value)
        .metric("oracle_ci_lo", oracle.ci.0)
        .metric("oracle_ci_hi", oracle.ci.1)
        .metric("gamma", cfg.gamma),
    );
    Ok(report)
}
