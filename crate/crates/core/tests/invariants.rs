use besselflow::flow::{bell_polynomials, partition_coefficients};
use besselflow::sde::{
    sample_besq_exact, simulate_bes, simulate_bes_exact, simulate_flow, NoisePath, Schedule, Scheme, StopMode,
    StreamSeed, TimeGrid,
};
use besselflow::stats::{ecdf, kolmogorov_survival, ks_statistic};
use proptest::prelude::*;

fn noise(seed: u64, horizon: f64, steps: usize) -> NoisePath {
    let schedule = Schedule::uniform(TimeGrid::horizon(horizon, steps).unwrap());
    NoisePath::sample(&schedule, &mut StreamSeed::new(seed).rng(0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flows_stay_ordered(
        seed in any::<u64>(),
        delta in 1.05f64..4.0,
        mut xs in prop::collection::vec(0.01f64..3.0, 2..6),
        implicit in any::<bool>(),
        stopped in any::<bool>(),
    ) {
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let scheme = if implicit { Scheme::ImplicitDrift } else { Scheme::EulerFloor };
        let mode = if stopped { StopMode::StoppedAtZero } else { StopMode::Free };
        let b = simulate_flow(&xs, delta, &noise(seed, 2.0, 400), scheme, mode).unwrap();
        for k in 0..b.path(0).len() {
            for w in b.paths().windows(2) {
                prop_assert!(w[0].values()[k] <= w[1].values()[k]);
            }
        }
        for p in b.paths() {
            prop_assert!(p.values().iter().all(|v| *v >= 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn stopped_paths_stay_at_zero(seed in any::<u64>(), delta in 1.05f64..1.95, x in 0.05f64..1.0) {
        let p = simulate_bes(x, delta, &noise(seed, 4.0, 400), Scheme::EulerFloor, StopMode::StoppedAtZero).unwrap();
        if let Some(k) = p.absorbed_at() {
            prop_assert!(p.values()[k..].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn exact_paths_repeat_under_a_seed(seed in any::<u64>(), delta in 1.05f64..3.0, x in 0.05f64..2.0) {
        let schedule = Schedule::uniform(TimeGrid::horizon(3.0, 64).unwrap());
        let run = || simulate_bes_exact(x, delta, &schedule, StopMode::Free, &mut StreamSeed::new(seed).rng(7)).unwrap();
        let (a, b) = (run(), run());
        prop_assert_eq!(a.values(), b.values());
    }

    #[test]
    fn squared_bessel_draws_are_nonnegative(seed in any::<u64>(), x2 in 0.0f64..10.0, delta in 0.1f64..6.0, t in 1e-6f64..10.0) {
        let v = sample_besq_exact(x2, delta, t, &mut StreamSeed::new(seed).rng(0)).unwrap();
        prop_assert!(v >= 0.0 && v.is_finite());
    }

    #[test]
    fn streams_are_independent_of_derivation_order(master in any::<u64>(), a in 0u64..1000, b in 0u64..1000) {
        use rand::Rng;
        let s = StreamSeed::new(master);
        let first: u64 = s.derive("x").rng(a).random();
        let _ = s.derive("y").rng(b).random::<u64>();
        let again: u64 = s.derive("x").rng(a).random();
        prop_assert_eq!(first, again);
    }

    #[test]
    fn ecdf_is_monotone(mut v in prop::collection::vec(-10.0f64..10.0, 1..50), t in -11.0f64..11.0, s in 0.0f64..1.0) {
        v.sort_by(f64::total_cmp);
        prop_assert!(ecdf(&v, t) <= ecdf(&v, t + s));
        prop_assert!((0.0..=1.0).contains(&ecdf(&v, t)));
    }

    #[test]
    fn kolmogorov_survival_decreases(a in 0.05f64..3.0, d in 0.0f64..1.0) {
        prop_assert!(kolmogorov_survival(a + d) <= kolmogorov_survival(a) + 1e-15);
    }
}

#[test]
fn recursion_matches_set_partitions() {
    for (n, p) in bell_polynomials(8).iter().enumerate().skip(1) {
        assert_eq!(p.terms(), &partition_coefficients(n), "order {n}");
    }
}

#[test]
fn bell_numbers_at_unit_derivatives() {
    // With every ∂ʳh = 1, P_n counts all set partitions.
    let bell = [1.0, 1.0, 2.0, 5.0, 15.0, 52.0, 203.0, 877.0, 4140.0];
    for (p, b) in bell_polynomials(8).iter().zip(bell) {
        assert_eq!(p.eval(&[1.0; 8]), b);
    }
}

#[test]
fn exponential_of_a_polynomial() {
    // h(x) = a x + b x²: ∂ⁿ exp(h) / exp(h) at x = 0 is Σ n!/(k!(n−2k)!) aⁿ⁻²ᵏ bᵏ.
    let (a, b) = (0.7_f64, -1.3_f64);
    let fact = |m: usize| (1..=m).map(|i| i as f64).product::<f64>();
    let dh = [a, 2.0 * b, 0.0, 0.0, 0.0, 0.0];
    for (n, p) in bell_polynomials(6).iter().enumerate() {
        let want: f64 = (0..=n / 2)
            .map(|k| fact(n) / (fact(k) * fact(n - 2 * k)) * a.powi((n - 2 * k) as i32) * b.powi(k as i32))
            .sum();
        assert!((p.eval(&dh) - want).abs() < 1e-12 * want.abs().max(1.0), "order {n}");
    }
}

#[test]
fn ks_statistic_of_uniform_quantiles() {
    // Midpoint quantiles of U(0,1) sit exactly 1/(2n) from the CDF.
    let n = 200;
    let v: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let d = ks_statistic(&v, |x| x.clamp(0.0, 1.0)).unwrap();
    assert!((d - 0.5 / n as f64).abs() < 1e-12);
}
