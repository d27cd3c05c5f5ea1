use besselflow::laws::{gamma_cdf, sample_tau0, t1_cdf, tau0_cdf, tau0_quantile};
use besselflow::sde::{first_zero, simulate_bes_exact, Schedule, Scheme, StopMode, StreamSeed};
use besselflow::stats::{kolmogorov_survival, ks_one_sample};

#[test]
fn kolmogorov_tail_values() {
    // Critical values at 5% and 1%, and a small-λ point where many terms matter.
    assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-5);
    assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-5);
    assert!((kolmogorov_survival(0.5) - 0.963_945).abs() < 1e-5);
}

#[test]
fn gamma_half_is_chi_square() {
    // γ_{1/2} = χ²₁/2, so P(γ_{1/2} ≤ 1/2) = P(|Z| ≤ 1).
    assert!((gamma_cdf(0.5, 0.5).unwrap() - 0.682_689_492).abs() < 1e-8);
}

#[test]
fn tau0_quantile_inverts_the_cdf() {
    for p in [0.1, 0.5, 0.9] {
        let t = tau0_quantile(0.8, 1.5, p).unwrap();
        assert!((tau0_cdf(0.8, 1.5, t).unwrap() - p).abs() < 1e-9);
    }
}

#[test]
fn t1_cdf_is_a_distribution() {
    assert!(t1_cdf(0.0) <= 1e-12);
    assert!(t1_cdf(1e6) > 0.99);
    assert!((1..100).all(|i| t1_cdf(i as f64 * 0.1) >= t1_cdf((i - 1) as f64 * 0.1)));
}

#[test]
fn analytic_tau0_sampler_passes_its_own_ks() {
    let mut rng = StreamSeed::new(11).rng(0);
    let v: Vec<f64> = (0..4000).map(|_| sample_tau0(1.0, 1.4, &mut rng).unwrap()).collect();
    let r = ks_one_sample(&v, |t| tau0_cdf(1.0, 1.4, t).unwrap()).unwrap();
    assert!(r.passed, "p = {:?}", r.p_value);
}

#[test]
fn simulated_first_zero_matches_the_gamma_law() {
    // Exact transitions plus the bridge touch test: τ₀(1) for δ = 1.5 is 1/(2γ_{1/4}).
    let schedule = Schedule::geometric(1.0 / 64.0, 2.0, 4096.0, 32).unwrap();
    let horizon = schedule.t_end();
    let mut hits = Vec::new();
    for i in 0..3000 {
        let p = simulate_bes_exact(1.0, 1.5, &schedule, StopMode::StoppedAtZero, &mut StreamSeed::new(5).rng(i)).unwrap();
        if let Some(k) = p.absorbed_at() {
            hits.push(p.nodes()[k]);
        }
    }
    // Censor at the horizon: compare the conditional law of τ₀ given τ₀ ≤ horizon.
    let mass = tau0_cdf(1.0, 1.5, horizon).unwrap();
    let r = ks_one_sample(&hits, |t| (tau0_cdf(1.0, 1.5, t).unwrap() / mass).min(1.0)).unwrap();
    assert!(r.passed, "n = {} p = {:?}", hits.len(), r.p_value);
}

#[test]
fn first_zero_and_stopped_exact_paths_agree_in_law() {
    // Two routes to τ₀: the streaming hitting search and a stored stopped path.
    let schedule = Schedule::geometric(1.0 / 64.0, 2.0, 1024.0, 32).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for i in 0..2000 {
        let h = first_zero(0.7, 1.3, &schedule, Scheme::ExactSquare, &mut StreamSeed::new(8).rng(i)).unwrap();
        if h.node.is_some() {
            a.push(h.time);
        }
        let p = simulate_bes_exact(0.7, 1.3, &schedule, StopMode::StoppedAtZero, &mut StreamSeed::new(9).rng(i)).unwrap();
        if let Some(k) = p.absorbed_at() {
            b.push(p.nodes()[k]);
        }
    }
    let r = besselflow::stats::ks_two_sample(&a, &b).unwrap();
    assert!(r.passed, "p = {:?}", r.p_value);
}
