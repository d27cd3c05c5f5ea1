//! Higher flow derivatives `∂ⁿρ` along one path, by two independent routes.
//!
//! Route one differentiates the closed form: `∂ⁿρ = Y·P_{n−1}(h)` with
//! `∂ᵏh = Σ_I c_I ∫ Q_I(ρ) / ρ^{2+j}`, where `Q_I = Π (∂ʳρ)^{i_r}` and
//! `c_I = −((δ−1)/2)·(−1)^j (j+1)!·[P_k]_I`. Route two integrates the
//! variational equations obtained by differentiating the SDE in `x`:
//! `d(∂ⁿρ) = ((δ−1)/2) ∂ⁿ(ρ⁻¹) dt`, linear in `∂ⁿρ` with a forcing term
//! made of lower orders, stepped with an exponential trapezoid rule.

use serde::{Deserialize, Serialize};

use super::bell::{bell_polynomials, BellPolynomial};
use super::quadrature::{dead_from, end_index, guarded, running_trapezoid};
use crate::error::{param, Result};
use crate::sde::BesselPath;

/// Default relative tolerance between the two routes.
pub const ROUTE_TOLERANCE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeStack {
    order: usize,
    delta: f64,
    x0: f64,
    nodes: Vec<f64>,
    h: Vec<f64>,
    y: Vec<f64>,
    dh: Vec<Vec<f64>>,
    drho: Vec<Vec<f64>>,
    drho_ode: Vec<Vec<f64>>,
    terminal_gaps: Vec<f64>,
    flags: Vec<bool>,
}

impl DerivativeStack {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// Nodes covered: up to `upto`, and before absorption in stopped mode.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// `∂ᵏh`, `1 ≤ k < order`.
    pub fn dh(&self, k: usize) -> &[f64] {
        &self.dh[k - 1]
    }

    /// `∂ᵐρ` from the closed form, `1 ≤ m ≤ order`.
    pub fn drho(&self, m: usize) -> &[f64] {
        &self.drho[m - 1]
    }

    /// `∂ᵐρ` from the variational equations.
    pub fn drho_ode(&self, m: usize) -> &[f64] {
        &self.drho_ode[m - 1]
    }

    /// `|a − b| / max(|a|, |b|)` between the routes at the last node, per order.
    pub fn terminal_gaps(&self) -> &[f64] {
        &self.terminal_gaps
    }

    /// Orders whose routes disagree beyond the tolerance at the last node.
    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn routes_agree(&self) -> bool {
        !self.flags.iter().any(|&f| f)
    }

    /// `(∂h, …, ∂^{order−1}h)` at node `k`.
    pub fn dh_at(&self, k: usize) -> Vec<f64> {
        self.dh.iter().map(|v| v[k]).collect()
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Both routes up to order `n` on `[0, upto]`.
pub fn variational_stack(path: &BesselPath, n: usize, upto: f64) -> Result<DerivativeStack> {
    variational_stack_with(path, n, upto, ROUTE_TOLERANCE)
}

pub fn variational_stack_with(
    path: &BesselPath,
    n: usize,
    upto: f64,
    tolerance: f64,
) -> Result<DerivativeStack> {
    stack_through(path, n, end_index(path, upto), tolerance)
}

/// Both routes up to order `n` through node `node`. For ends that times
/// cannot separate: steps near a zero can fall below ulp(t).
pub fn variational_stack_at(path: &BesselPath, n: usize, node: usize) -> Result<DerivativeStack> {
    stack_through(path, n, node.min(path.len() - 1), ROUTE_TOLERANCE)
}

fn stack_through(path: &BesselPath, n: usize, end: usize, tolerance: f64) -> Result<DerivativeStack> {
    if n == 0 {
        return Err(param("n", "derivative order must be ≥ 1"));
    }
    let delta = path.delta();
    let c = 0.5 * (delta - 1.0);
    let mut end = end;
    if let Some(d) = dead_from(path) {
        if d == 0 {
            return Err(param("path", "path starts absorbed"));
        }
        end = end.min(d - 1);
    }
    let nodes = path.nodes()[..=end].to_vec();
    let steps = &path.steps()[..end];
    let rho: Vec<f64> = (0..=end).map(|k| guarded(path, k)).collect();
    let polys = bell_polynomials(n);

    let inv_sq = running_trapezoid(steps, end, |k| rho[k].powi(-2));
    let h: Vec<f64> = inv_sq.iter().map(|i| -c * i).collect();
    let y: Vec<f64> = h.iter().map(|v| v.exp()).collect();

    // Closed-form route, assembled order by order.
    let mut dh: Vec<Vec<f64>> = Vec::with_capacity(n.saturating_sub(1));
    let mut drho: Vec<Vec<f64>> = vec![y.clone()];
    for k in 1..n {
        let terms = dhn_terms(&polys[k], c);
        let integrand: Vec<f64> = (0..=end)
            .map(|s| {
                terms
                    .iter()
                    .map(|(counts, coef, j)| {
                        coef * monomial(counts, &drho, s) * rho[s].powi(-(2 + *j as i32))
                    })
                    .sum()
            })
            .collect();
        dh.push(running_trapezoid(steps, end, |s| integrand[s]));
        let next: Vec<f64> = (0..=end)
            .map(|s| {
                let at: Vec<f64> = dh.iter().map(|v| v[s]).collect();
                y[s] * polys[k].eval(&at)
            })
            .collect();
        drho.push(next);
    }

    // Variational route.
    let mut ode: Vec<Vec<f64>> = Vec::with_capacity(n);
    for m in 1..=n {
        let forcing = forcing_terms(&polys[m], m);
        let f: Vec<f64> = (0..=end)
            .map(|s| {
                c * forcing
                    .iter()
                    .map(|(counts, coef, j)| {
                        coef * monomial(counts, &ode, s) * rho[s].powi(-(1 + *j as i32))
                    })
                    .sum::<f64>()
            })
            .collect();
        let mut v = Vec::with_capacity(end + 1);
        v.push(if m == 1 { 1.0 } else { 0.0 });
        for k in 0..end {
            let dt = steps[k];
            let decay = (-c * 0.5 * dt * (rho[k].powi(-2) + rho[k + 1].powi(-2))).exp();
            v.push(decay * v[k] + 0.5 * dt * (decay * f[k] + f[k + 1]));
        }
        ode.push(v);
    }

    let terminal_gaps: Vec<f64> = (0..n)
        .map(|m| relative_gap(drho[m][end], ode[m][end]))
        .collect();
    let flags = terminal_gaps.iter().map(|&g| !(g <= tolerance)).collect();
    Ok(DerivativeStack {
        order: n,
        delta,
        x0: path.x0(),
        nodes,
        h,
        y,
        dh,
        drho,
        drho_ode: ode,
        terminal_gaps,
        flags,
    })
}

/// `(counts, c_I, j)` for `∂ᵏh`.
fn dhn_terms(pk: &BellPolynomial, c: f64) -> Vec<(Vec<u32>, f64, usize)> {
    pk.terms()
        .iter()
        .map(|(idx, &bell)| {
            let j = idx.factors();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let coef = -c * sign * factorial(j + 1) * bell as f64;
            (idx.counts().to_vec(), coef, j)
        })
        .collect()
}

/// Terms of `∂ᵐ(ρ⁻¹)` other than `−ρ⁻² ∂ᵐρ`: `(counts, [P_m]_I (−1)^j j!, j)`.
fn forcing_terms(pm: &BellPolynomial, m: usize) -> Vec<(Vec<u32>, f64, usize)> {
    pm.terms()
        .iter()
        .filter(|(idx, _)| idx.counts().get(m - 1).copied().unwrap_or(0) == 0)
        .map(|(idx, &bell)| {
            let j = idx.factors();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            (idx.counts().to_vec(), sign * factorial(j) * bell as f64, j)
        })
        .collect()
}

/// `Π_r (∂ʳρ)^{i_r}` at node `s`, from `orders[r − 1]`.
fn monomial(counts: &[u32], orders: &[Vec<f64>], s: usize) -> f64 {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &i)| i > 0)
        .map(|(r, &i)| orders[r][s].powi(i as i32))
        .product()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::first_derivative;
    use crate::sde::{generate_noise, simulate_bes, Scheme, StopMode, TimeGrid};

    fn path(seed: u64, delta: f64) -> BesselPath {
        let w = generate_noise(&TimeGrid::horizon(1.0, 1 << 14).unwrap(), seed);
        simulate_bes(1.0, delta, &w, Scheme::EulerFloor, StopMode::Free).unwrap()
    }

    #[test]
    fn order_one_routes_coincide() {
        let p = path(1, 2.5);
        let s = variational_stack(&p, 1, 1.0).unwrap();
        let y = first_derivative(&p);
        for k in 0..s.len() {
            assert!((s.drho_ode(1)[k] / y[k] - 1.0).abs() < 1e-6);
            assert_eq!(s.drho(1)[k], y[k]);
        }
        assert_eq!(s.y()[0], 1.0);
    }

    #[test]
    fn first_h_derivative_is_nonnegative() {
        let p = path(2, 2.5);
        let s = variational_stack(&p, 3, 1.0).unwrap();
        assert!(s.dh(1).iter().all(|&v| v >= 0.0));
        assert!(s.h().windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn second_and_third_orders_agree() {
        let p = path(3, 2.5);
        let s = variational_stack(&p, 3, 1.0).unwrap();
        assert!(s.routes_agree(), "gaps {:?}", s.terminal_gaps());
    }

    #[test]
    fn second_h_derivative_matches_explicit_form() {
        // ∂²h = (δ−1)∫∂²ρ/ρ³ − 3(δ−1)∫Y²/ρ⁴.
        let p = path(4, 2.5);
        let s = variational_stack(&p, 3, 1.0).unwrap();
        let end = s.len() - 1;
        let steps = p.steps();
        let rho: Vec<f64> = (0..=end).map(|k| guarded(&p, k)).collect();
        let a = running_trapezoid(steps, end, |k| s.drho(2)[k] / rho[k].powi(3));
        let b = running_trapezoid(steps, end, |k| s.y()[k].powi(2) / rho[k].powi(4));
        let expect = 1.5 * a[end] - 4.5 * b[end];
        assert!((s.dh(2)[end] - expect).abs() < 1e-9 * expect.abs().max(1.0));
    }
}
