//! Bound statistics `b_n`, `B_n`, the `U`-chain and the majoration ratio.

use serde::{Deserialize, Serialize};

use super::bell::bell_polynomials;
use super::quadrature::{dead_from, end_index, guarded, running_trapezoid};
use super::stack::variational_stack_at;
use crate::error::{param, Result};
use crate::laws::u_chain;
use crate::sde::BesselPath;

/// An infinite-horizon integral counts as converged when the mean of its
/// integrand over the last `window` nodes is below `rel_tol` times the
/// integral accumulated so far.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationRule {
    pub window: usize,
    pub rel_tol: f64,
}

impl Default for TruncationRule {
    fn default() -> Self {
        Self {
            window: 64,
            rel_tol: 1e-8,
        }
    }
}

impl TruncationRule {
    /// Integral over the path and whether the rule flags it as truncated.
    pub fn integrate(&self, steps: &[f64], integrand: &[f64]) -> (f64, bool) {
        let end = integrand.len() - 1;
        let total = running_trapezoid(steps, end, |k| integrand[k])[end];
        let w = self.window.clamp(1, integrand.len());
        let tail = integrand[integrand.len() - w..].iter().sum::<f64>() / w as f64;
        (total, !(tail < self.rel_tol * total))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundStatistics {
    /// `b_k = x^k ∫ Y^k / ρ^{k+2}`, `k = 1..n`.
    pub b: Vec<f64>,
    /// `B_k = Σ_{i ≤ k} b_i^{1/i}`.
    pub big_b: Vec<f64>,
    pub truncated: Vec<bool>,
}

/// Live range of a path: all of it in free mode, up to absorption otherwise.
fn live_end(path: &BesselPath) -> Result<usize> {
    let end = end_index(path, f64::INFINITY);
    match dead_from(path) {
        Some(0) => Err(param("path", "path starts absorbed")),
        Some(d) => Ok(end.min(d - 1)),
        None => Ok(end),
    }
}

pub fn bound_statistics(path: &BesselPath, n: usize, rule: TruncationRule) -> Result<BoundStatistics> {
    if n == 0 {
        return Err(param("n", "order must be ≥ 1"));
    }
    let end = live_end(path)?;
    let steps = &path.steps()[..end];
    let c = 0.5 * (path.delta() - 1.0);
    let rho: Vec<f64> = (0..=end).map(|k| guarded(path, k)).collect();
    let inv_sq = running_trapezoid(steps, end, |k| rho[k].powi(-2));
    let y: Vec<f64> = inv_sq.iter().map(|i| (-c * i).exp()).collect();
    let x = path.x0();
    let mut b = Vec::with_capacity(n);
    let mut truncated = Vec::with_capacity(n);
    for k in 1..=n {
        let f: Vec<f64> = (0..=end)
            .map(|s| y[s].powi(k as i32) * rho[s].powi(-(k as i32 + 2)))
            .collect();
        let (v, t) = rule.integrate(steps, &f);
        b.push(x.powi(k as i32) * v);
        truncated.push(t);
    }
    let mut big_b = Vec::with_capacity(n);
    let mut acc = 0.0;
    for (k, &bk) in b.iter().enumerate() {
        acc += bk.powf(1.0 / (k + 1) as f64);
        big_b.push(acc);
    }
    Ok(BoundStatistics {
        b,
        big_b,
        truncated,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UStatistics {
    /// `U_1 … U_n` with `U₁ = (δ−1) x ∫ Y/ρ³` and the product chain.
    pub chain: Vec<f64>,
    /// `x^k P_k(h)` at the last node, `k = 1..n`.
    pub direct: Vec<f64>,
    pub truncated: bool,
}

pub fn u_statistics(path: &BesselPath, n: usize, rule: TruncationRule) -> Result<UStatistics> {
    if n == 0 {
        return Err(param("n", "order must be ≥ 1"));
    }
    let end = live_end(path)?;
    let steps = &path.steps()[..end];
    let delta = path.delta();
    let c = 0.5 * (delta - 1.0);
    let rho: Vec<f64> = (0..=end).map(|k| guarded(path, k)).collect();
    let inv_sq = running_trapezoid(steps, end, |k| rho[k].powi(-2));
    let f: Vec<f64> = (0..=end)
        .map(|s| (-c * inv_sq[s]).exp() * rho[s].powi(-3))
        .collect();
    let (integral, truncated) = rule.integrate(steps, &f);
    let x = path.x0();
    let u1 = (delta - 1.0) * x * integral;
    let chain = (1..=n).map(|k| u_chain(u1, k)).collect();

    let stack = variational_stack_at(path, n + 1, end)?;
    let last = stack.len() - 1;
    let dh = stack.dh_at(last);
    let polys = bell_polynomials(n);
    let direct = (1..=n)
        .map(|k| x.powi(k as i32) * polys[k].eval(&dh))
        .collect();
    Ok(UStatistics {
        chain,
        direct,
        truncated,
    })
}

/// `max_t |x^n P_n(h_t)| / B_n^n` over the stack's nodes: the constant that
/// the majoration `|xⁿ P_n(h)| ≤ c Bₙⁿ` needs on this path. Requires a stack
/// of order `> n`.
pub fn majoration_ratio(
    stack: &super::stack::DerivativeStack,
    bounds: &BoundStatistics,
    n: usize,
) -> Result<f64> {
    if n == 0 || n >= stack.order() || n > bounds.big_b.len() {
        return Err(param("n", "need 1 ≤ n < stack order and n ≤ bound order"));
    }
    let polys = bell_polynomials(n);
    let x = stack.x0();
    let scale = bounds.big_b[n - 1].powi(n as i32);
    let worst = (0..stack.len())
        .map(|k| (x.powi(n as i32) * polys[n].eval(&stack.dh_at(k))).abs())
        .fold(0.0, f64::max);
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::{NoisePath, Schedule, Scheme, StopMode, StreamSeed};
    use crate::sde::simulate_bes;
    use crate::flow::variational_stack;

    fn long_path(i: u64) -> BesselPath {
        let sched = Schedule::geometric(1.0, 2.0, 65536.0, 512).unwrap();
        let w = NoisePath::sample(&sched, &mut StreamSeed::new(77).rng(i));
        simulate_bes(1.0, 2.5, &w, Scheme::EulerFloor, StopMode::Free).unwrap()
    }

    #[test]
    fn bounds_are_nonnegative_and_monotone() {
        let p = long_path(0);
        let s = bound_statistics(&p, 4, TruncationRule::default()).unwrap();
        assert!(s.b.iter().all(|&v| v >= 0.0));
        assert!(s.big_b.windows(2).all(|w| w[1] >= w[0]));
        assert!(!s.truncated[0]);
    }

    #[test]
    fn first_chain_term_matches_direct_limit() {
        let p = long_path(1);
        let u = u_statistics(&p, 2, TruncationRule::default()).unwrap();
        assert!(!u.truncated);
        assert!((u.direct[0] / u.chain[0] - 1.0).abs() < 1e-6);
        assert!(u.direct[1].is_finite());
        assert_eq!(u.chain[1], u.chain[0] * (u.chain[0] - 1.0));
    }

    #[test]
    fn majoration_ratio_is_finite() {
        let p = long_path(2);
        let s = variational_stack(&p, 3, f64::INFINITY).unwrap();
        let b = bound_statistics(&p, 2, TruncationRule::default()).unwrap();
        for n in 1..=2 {
            let r = majoration_ratio(&s, &b, n).unwrap();
            assert!(r.is_finite() && r > 0.0);
        }
    }
}
