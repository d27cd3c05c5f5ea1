//! Running integrals along a path: `∫ρ⁻²`, `h`, `Y` and the increment ratio.
//!
//! Trapezoidal rule on the simulation nodes throughout. Euler-floor values
//! are guarded from below by the scheme floor of the step, the same value the
//! scheme's drift saw; implicit-drift values are positive and used as they
//! are. In stopped mode every integral is `+∞` from the absorption node on.

use crate::error::{param, Result};
use crate::sde::{BesselPath, FlowBundle, Scheme, StopMode};

/// `∫₀^{t_k} f` at every node `k ≤ end`, trapezoidal over the step lengths.
pub(crate) fn running_trapezoid(steps: &[f64], end: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(end + 1);
    out.push(0.0);
    let mut acc = 0.0;
    let mut prev = f(0);
    for k in 1..=end {
        let cur = f(k);
        acc += 0.5 * steps[k - 1] * (prev + cur);
        out.push(acc);
        prev = cur;
    }
    out
}

/// Value at node `k` as the scheme's drift sees it.
#[inline]
pub(crate) fn guarded(path: &BesselPath, k: usize) -> f64 {
    match path.scheme() {
        Scheme::EulerFloor => path.values()[k].max(path.floor_at(k)),
        Scheme::ImplicitDrift | Scheme::Lamperti | Scheme::ExactSquare => path.values()[k].max(f64::MIN_POSITIVE),
    }
}

/// First node at which the stopped path sits at zero.
pub(crate) fn dead_from(path: &BesselPath) -> Option<usize> {
    match path.mode() {
        StopMode::StoppedAtZero => path.absorbed_at(),
        StopMode::Free => None,
    }
}

/// Last node to integrate to: the node at or before `upto`.
pub(crate) fn end_index(path: &BesselPath, upto: f64) -> usize {
    path.index_at_or_before(upto)
}

fn cut_at_absorption(mut v: Vec<f64>, dead: Option<usize>) -> Vec<f64> {
    if let Some(d) = dead {
        for x in v.iter_mut().skip(d) {
            *x = f64::INFINITY;
        }
    }
    v
}

/// `∫₀^t ρ_s⁻² ds` at every node up to `upto`.
pub fn integral_inverse_square(path: &BesselPath, upto: f64) -> Vec<f64> {
    let end = end_index(path, upto);
    let dead = dead_from(path);
    let last = dead.map_or(end, |d| end.min(d.saturating_sub(1)));
    let mut v = running_trapezoid(path.steps(), last, |k| guarded(path, k).powi(-2));
    v.resize(end + 1, f64::INFINITY);
    cut_at_absorption(v, dead)
}

/// `h_t = −((δ−1)/2) ∫₀^t ρ⁻²` over the whole path.
pub fn h_process(path: &BesselPath) -> Vec<f64> {
    let c = 0.5 * (path.delta() - 1.0);
    integral_inverse_square(path, f64::INFINITY)
        .into_iter()
        .map(|i| -c * i)
        .collect()
}

/// `Y_t = ∂ρ^x_t/∂x = exp(h_t)`; zero from absorption on in stopped mode.
pub fn first_derivative(path: &BesselPath) -> Vec<f64> {
    h_process(path).into_iter().map(f64::exp).collect()
}

/// `Z^{y,x}` by quadrature and the raw difference quotient it represents.
#[derive(Clone, Debug, PartialEq)]
pub struct IncrementRatio {
    /// `exp(−((δ−1)/2) ∫₀^t (ρ^y ρ^x)⁻¹ ds)`.
    pub closed_form: Vec<f64>,
    /// `(ρ^y_t − ρ^x_t) / (y − x)`; `None` when `y = x`.
    pub raw: Option<Vec<f64>>,
}

impl IncrementRatio {
    /// Largest `|raw/closed − 1|` over nodes where the closed form is positive.
    pub fn max_relative_gap(&self) -> Option<f64> {
        let raw = self.raw.as_ref()?;
        Some(
            raw.iter()
                .zip(&self.closed_form)
                .filter(|(_, &z)| z > 0.0)
                .map(|(r, z)| (r / z - 1.0).abs())
                .fold(0.0, f64::max),
        )
    }
}

pub fn increment_ratio(bundle: &FlowBundle, x: f64, y: f64, upto: f64) -> Result<IncrementRatio> {
    let ix = bundle
        .index_of(x)
        .ok_or_else(|| param("x", format!("{x} is not an initial value of the bundle")))?;
    let iy = bundle
        .index_of(y)
        .ok_or_else(|| param("y", format!("{y} is not an initial value of the bundle")))?;
    let (px, py) = (bundle.path(ix), bundle.path(iy));
    let c = 0.5 * (bundle.delta() - 1.0);
    let end = end_index(px, upto);
    let dead = match (dead_from(px), dead_from(py)) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let last = dead.map_or(end, |d| end.min(d.saturating_sub(1)));
    let mut integral = running_trapezoid(px.steps(), last, |k| {
        1.0 / (guarded(px, k) * guarded(py, k))
    });
    integral.resize(end + 1, f64::INFINITY);
    let integral = cut_at_absorption(integral, dead);
    let closed_form = integral.iter().map(|i| (-c * i).exp()).collect();
    let raw = (y != x).then(|| {
        (0..=end)
            .map(|k| (py.values()[k] - px.values()[k]) / (y - x))
            .collect()
    });
    Ok(IncrementRatio { closed_form, raw })
}

/// `∫₀^t Y^α / ρ^β ds` at every node.
pub fn power_integral(path: &BesselPath, alpha: f64, beta: f64, upto: f64) -> Vec<f64> {
    let y = first_derivative(path);
    let end = end_index(path, upto);
    let dead = dead_from(path);
    let last = dead.map_or(end, |d| end.min(d.saturating_sub(1)));
    let mut v = running_trapezoid(path.steps(), last, |k| {
        y[k].powf(alpha) * guarded(path, k).powf(-beta)
    });
    v.resize(end + 1, f64::INFINITY);
    cut_at_absorption(v, dead)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::{generate_noise, simulate_bes, simulate_flow, NoisePath, Scheme, TimeGrid};

    /// A simulated path overwritten with a constant value.
    fn constant(level: f64, delta: f64) -> BesselPath {
        let g = TimeGrid::horizon(1.0, 1000).unwrap();
        let w = NoisePath::from_increments(g.into(), vec![0.0; 1000]).unwrap();
        let mut p = simulate_bes(level, delta, &w, Scheme::EulerFloor, StopMode::Free).unwrap();
        p.values.iter_mut().for_each(|v| *v = level);
        p
    }

    #[test]
    fn constant_paths() {
        let p = constant(1.0, 3.0);
        let i = integral_inverse_square(&p, 1.0);
        for (k, t) in p.nodes().iter().enumerate() {
            assert!((i[k] - t).abs() < 1e-12);
        }
        let y = first_derivative(&p);
        assert_eq!(y[0], 1.0);
        assert!((y[1000] - (-1.0f64).exp()).abs() < 1e-12);
        let q = constant(2.0, 3.0);
        assert!((integral_inverse_square(&q, 1.0)[1000] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn monotone_and_bounded() {
        let w = generate_noise(&TimeGrid::horizon(1.0, 4096).unwrap(), 8);
        let b = simulate_flow(&[0.8, 1.0], 2.5, &w, Scheme::EulerFloor, StopMode::Free).unwrap();
        let y = first_derivative(b.path(0));
        assert!(y.windows(2).all(|w| w[1] <= w[0]));
        assert!(y.iter().all(|&v| v > 0.0 && v <= 1.0));
        let z = increment_ratio(&b, 0.8, 1.0, 1.0).unwrap();
        assert!(z.closed_form.windows(2).all(|w| w[1] <= w[0]));
        assert!(z.closed_form.iter().all(|&v| v > 0.0 && v <= 1.0));
        let same = increment_ratio(&b, 1.0, 1.0, 1.0).unwrap();
        assert!(same.raw.is_none());
        let y1 = first_derivative(b.path(1));
        for (a, b) in same.closed_form.iter().zip(&y1) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn stopped_paths_have_zero_derivative_after_absorption() {
        let g = TimeGrid::horizon(4.0, 4096).unwrap();
        for seed in 0..20 {
            let w = generate_noise(&g, seed);
            let p = simulate_bes(0.2, 1.5, &w, Scheme::ImplicitDrift, StopMode::StoppedAtZero).unwrap();
            if let Some(k) = p.absorbed_at() {
                let y = first_derivative(&p);
                assert!(y[k..].iter().all(|&v| v == 0.0));
                assert!(y[..k].iter().all(|&v| v > 0.0));
                return;
            }
        }
        panic!("no absorbed path among 20 seeds");
    }
}
