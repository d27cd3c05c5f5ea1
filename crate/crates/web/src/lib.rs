//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export takes plain numbers and returns flat `f64` arrays or text, so
//! the page needs no glue beyond what `wasm-bindgen --target web` emits.

use besselflow::flow::{bell_polynomials, BellPolynomial};
use besselflow::laws::tau0_cdf;
use besselflow::sde::{first_zero, simulate_flow, NoisePath, Schedule, Scheme, StopMode, StreamSeed, TimeGrid};
use wasm_bindgen::prelude::*;

const MAX_PATHS: usize = 200_000;

fn js_error(e: besselflow::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Coupled paths from `xs` driven by one Brownian path on `[0, horizon]`.
///
/// Row-major `(xs.len() + 1) × (steps + 1)`: node times first, then one row
/// per initial value. Stopped at zero when `stopped` is set.
pub fn flow_rows(xs: &[f64], delta: f64, horizon: f64, steps: usize, stopped: bool, seed: u64) -> besselflow::Result<Vec<f64>> {
    let schedule = Schedule::uniform(TimeGrid::horizon(horizon, steps)?);
    let noise = NoisePath::sample(&schedule, &mut StreamSeed::new(seed).derive("web-flow").rng(0));
    let mode = if stopped { StopMode::StoppedAtZero } else { StopMode::Free };
    let bundle = simulate_flow(xs, delta, &noise, Scheme::ImplicitDrift, mode)?;
    let mut out = bundle.path(0).nodes().to_vec();
    for p in bundle.paths() {
        out.extend_from_slice(p.values());
    }
    Ok(out)
}

/// Histogram of simulated `τ₀(x)/x²` against the law `1/(2γ_ν)`, `ν = 1 − δ/2`.
///
/// Bins are log-spaced on `[lo, hi]`. Returns `bins + 1` edges, then the
/// simulated fraction per bin, then the exact fraction per bin. Paths that
/// have not hit zero by `hi` fall outside every bin.
pub fn tau0_histogram(delta: f64, n_paths: usize, bins: usize, lo: f64, hi: f64, seed: u64) -> besselflow::Result<Vec<f64>> {
    if bins == 0 || n_paths == 0 || n_paths > MAX_PATHS || !(lo > 0.0 && hi > lo) {
        return Err(besselflow::Error::Param {
            name: "histogram",
            reason: format!("need 1..={MAX_PATHS} paths, at least one bin and 0 < lo < hi"),
        });
    }
    let schedule = Schedule::geometric(lo, 2.0, hi, 64)?;
    let stream = StreamSeed::new(seed).derive("web-tau0");
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let edges: Vec<f64> = (0..=bins)
        .map(|i| (ln_lo + (ln_hi - ln_lo) * i as f64 / bins as f64).exp())
        .collect();
    let mut counts = vec![0.0; bins];
    for i in 0..n_paths {
        let hit = first_zero(1.0, delta, &schedule, Scheme::ExactSquare, &mut stream.rng(i as u64))?;
        if hit.node.is_some() && hit.time >= lo && hit.time < hi {
            let b = edges.partition_point(|&e| e <= hit.time) - 1;
            counts[b.min(bins - 1)] += 1.0;
        }
    }
    let mut out = edges.clone();
    out.extend(counts.iter().map(|c| c / n_paths as f64));
    for w in edges.windows(2) {
        out.push(tau0_cdf(1.0, delta, w[1])? - tau0_cdf(1.0, delta, w[0])?);
    }
    Ok(out)
}

/// `P_n` written out in `h', h'', …`, one term per monomial.
pub fn polynomial_text(p: &BellPolynomial) -> String {
    if p.order() == 0 {
        return "1".to_string();
    }
    let primes = |r: usize| if r <= 3 { format!("h{}", "'".repeat(r)) } else { format!("h^({r})") };
    let terms: Vec<String> = p
        .terms()
        .iter()
        .rev()
        .map(|(idx, &c)| {
            let factors: Vec<String> = idx
                .counts()
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(r, &k)| if k == 1 { primes(r + 1) } else { format!("({})^{k}", primes(r + 1)) })
                .collect();
            let body = factors.join(" ");
            if c == 1 {
                body
            } else {
                format!("{c} {body}")
            }
        })
        .collect();
    terms.join(" + ")
}

#[wasm_bindgen(js_name = flowPaths)]
pub fn flow_paths(xs: Vec<f64>, delta: f64, horizon: f64, steps: usize, stopped: bool, seed: u64) -> Result<Vec<f64>, JsError> {
    flow_rows(&xs, delta, horizon, steps, stopped, seed).map_err(js_error)
}

#[wasm_bindgen(js_name = tau0Histogram)]
pub fn tau0_histogram_js(delta: f64, n_paths: usize, bins: usize, lo: f64, hi: f64, seed: u64) -> Result<Vec<f64>, JsError> {
    tau0_histogram(delta, n_paths, bins, lo, hi, seed).map_err(js_error)
}

/// `P_n` as text and its value at the given derivatives `[h', h'', …]`.
#[wasm_bindgen(js_name = bellPolynomial)]
pub fn bell_polynomial(n: usize, dh: Vec<f64>) -> Result<Vec<JsValue>, JsError> {
    if n > 10 {
        return Err(JsError::new("orders above 10 are not offered"));
    }
    let p = &bell_polynomials(n)[n];
    let mut dh = dh;
    dh.resize(n.max(1), 0.0);
    Ok(vec![JsValue::from_str(&polynomial_text(p)), JsValue::from_f64(p.eval(&dh))])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_rows_have_one_row_per_start() {
        let v = flow_rows(&[0.5, 1.0, 2.0], 1.5, 1.0, 100, true, 3).unwrap();
        assert_eq!(v.len(), 4 * 101);
        for k in 0..101 {
            assert!(v[101 + k] <= v[202 + k] && v[202 + k] <= v[303 + k]);
        }
    }

    #[test]
    fn histogram_masses_are_fractions() {
        let v = tau0_histogram(1.5, 2000, 12, 0.01, 100.0, 1).unwrap();
        let (sim, law) = (&v[13..25], &v[25..37]);
        let (s, l): (f64, f64) = (sim.iter().sum(), law.iter().sum());
        assert!(s <= 1.0 && l <= 1.0);
        // Most of the mass of 1/(2γ_{1/4}) lies in [0.01, 100].
        assert!((s - l).abs() < 0.05, "simulated {s} against {l}");
    }

    #[test]
    fn third_polynomial_reads_naturally() {
        let p = &bell_polynomials(3)[3];
        assert_eq!(polynomial_text(p), "(h')^3 + 3 h' h'' + h'''");
    }

    #[test]
    fn rejects_oversized_requests() {
        assert!(tau0_histogram(1.5, MAX_PATHS + 1, 10, 0.1, 10.0, 0).is_err());
    }
}
