use onsager_lab::params::{
    asymptotic_ratios, check_shrinking, default_dx_grid, fit_b, holder_modulus_log, iterate,
    iterate_with_gains, leading_coefficient, optimal_gamma, passing_stress_level,
    support_and_c0_sums, IterationConfig,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn key_rule_holds_for_random_gains() {
    let settings = [(1.0, 2.5), (std::f64::consts::E, 2.5), (7.0, 1.5)];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (c_hat, a_exp) in settings {
        for _ in 0..10 {
            let gains: Vec<f64> = (0..400).map(|_| rng.gen_range(0.5..30.0)).collect();
            let config = IterationConfig {
                c_hat,
                a_exp,
                k_max: 400,
                ..Default::default()
            };
            let t = iterate_with_gains(&config, |k| gains[k]).unwrap();
            let worst = t.key_rule_relative.iter().cloned().fold(0.0, f64::max);
            assert!(worst < 1e-10, "c_hat {c_hat}, A {a_exp}: {worst:e}");
        }
    }
}

#[test]
fn deep_iteration_is_fast() {
    let start = std::time::Instant::now();
    let t = iterate(&IterationConfig::default()).unwrap();
    assert_eq!(t.k_max(), 10_000);
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

fn b_fit(config: IterationConfig) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let t = iterate(&config).unwrap();
    let fit = fit_b(&t, &default_dx_grid(&t, 40)).unwrap();
    (fit.log_inv_dx, fit.b, fit.extrapolated, fit.target)
}

#[test]
fn borderline_constant_gamma_four() {
    let (ls, bs, extrapolated, target) = b_fit(IterationConfig::default());
    assert!((target - 2.0 * (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
    let deepest = *bs.last().unwrap();
    assert!((deepest - target).abs() < 0.2 * target, "{deepest}");
    assert!(
        (extrapolated - target).abs() < 0.2 * target,
        "{extrapolated}"
    );
    // Distance to the target shrinks over the last decade of log |dx|^-1.
    let top = *ls.last().unwrap();
    let tail: Vec<f64> = ls
        .iter()
        .zip(&bs)
        .filter(|(l, _)| **l >= top / 10.0)
        .map(|(_, b)| (b - target).abs())
        .collect();
    assert!(tail.len() >= 5);
    assert!(tail.windows(2).all(|w| w[1] < w[0]), "{tail:?}");
}

#[test]
fn borderline_constant_improved_scheme() {
    let (_, bs, _, target) = b_fit(IterationConfig::improved());
    assert!((target - 4.0 / 3.0).abs() < 1e-14);
    let deepest = *bs.last().unwrap();
    assert!((deepest - target).abs() < 0.2 * target, "{deepest}");
}

#[test]
fn gamma_minimizers() {
    let (g, c) = optimal_gamma(2.5, 1.0, 10.0, 0.01);
    assert!((g - 4.0).abs() <= 0.05);
    assert!((c - leading_coefficient(4.0, 2.5)).abs() < 1e-4);
    let (g, _) = optimal_gamma(1.5, 1.0, 10.0, 0.01);
    assert!((g - 8.0 / 3.0).abs() <= 0.05);
}

#[test]
fn asymptotic_ratios_improve_with_k() {
    let t = iterate(&IterationConfig::default()).unwrap();
    let a = asymptotic_ratios(&t, 1_000).unwrap().as_array();
    let b = asymptotic_ratios(&t, 9_999).unwrap().as_array();
    // The key combination peaks near k = 3000 and is slightly farther from 1 at k = 10^4.
    for i in 0..5 {
        assert!(
            (b[i] - 1.0).abs() < (a[i] - 1.0).abs(),
            "ratio {i}: {} -> {}",
            a[i],
            b[i]
        );
    }
    // All but the log log ratio are already within 15% at k = 1000.
    for (i, r) in a.iter().chain(&b).enumerate().filter(|(i, _)| i % 6 != 4) {
        assert!((r - 1.0).abs() < 0.15, "ratio {}: {r}", i % 6);
    }
}

#[test]
fn passing_level_gives_clean_trace_and_short_tail() {
    let c = IterationConfig::default();
    let l = passing_stress_level(&c, 1e-6).unwrap();
    let t = iterate(&IterationConfig {
        log_er_init: l,
        ..c
    })
    .unwrap();
    assert!(check_shrinking(&t).is_empty());
    let sums = support_and_c0_sums(&t);
    assert!(sums.c0_total <= 5.0);
    assert!(sums.support_tail_fraction(50) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn modulus_is_monotone(l in 10.0f64..2.5e5, shrink in 1.0001f64..2.0) {
        let t = iterate(&IterationConfig { k_max: 200, ..Default::default() }).unwrap();
        let a = holder_modulus_log(&t, l).unwrap();
        let b = holder_modulus_log(&t, l * shrink).unwrap();
        prop_assert!(b.log_bound <= a.log_bound);
    }
}
