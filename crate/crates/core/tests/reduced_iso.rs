mod common;

use proptest::prelude::*;
use reduced_isotonic::pava::isotonic_fit;
use reduced_isotonic::reduced_iso::{brute_force_oracle, fit_all_k, fit_k, fit_k_antitonic};
use reduced_isotonic::Series64;

fn small_series() -> impl Strategy<Value = Series64> {
    (1usize..=10).prop_flat_map(|n| {
        prop_oneof![
            prop::collection::vec((0i32..5).prop_map(f64::from), n),
            prop::collection::vec(-10.0f64..10.0, n),
        ]
        .prop_map(|v| Series64::new(v).unwrap())
    })
}

fn medium_series() -> impl Strategy<Value = Series64> {
    (1usize..=50).prop_flat_map(|n| {
        prop_oneof![
            prop::collection::vec((0i32..5).prop_map(f64::from), n),
            prop::collection::vec(-10.0f64..10.0, n),
        ]
        .prop_map(|v| Series64::new(v).unwrap())
    })
}

/// Checks the three knot properties of an optimal `k`-piece monotone fit.
fn check_knot_properties(x: &Series64, k: usize) -> Result<(), TestCaseError> {
    let vals = x.values();
    let n = x.len();
    let r = fit_k(x, k).unwrap();
    let knots = r.fit.knots();
    let levels = r.fit.levels();

    for (s, e, level) in r.fit.blocks() {
        let m = x.block_mean(s..e);
        prop_assert!((level - m).abs() <= 1e-10, "block ({s},{e}]: {level} vs {m}");
    }

    let mean = |a: usize, b: usize| vals[a..b].iter().sum::<f64>() / (b - a) as f64;
    for j in 0..knots.len().saturating_sub(1) {
        let a = knots[j];
        let mid = 0.5 * (levels[j] + levels[j + 1]);
        for s in 0..a {
            prop_assert!(mean(s, a) < mid + 1e-12, "k={k} knot {a} s={s}");
        }
        for t in a + 1..=n {
            prop_assert!(mid < mean(a, t) + 1e-12, "k={k} knot {a} t={t}");
        }
    }

    let full = isotonic_fit(x).unwrap();
    prop_assert!(knots.iter().all(|a| full.fit.knots().contains(a)), "k={k}: {knots:?} not in {:?}", full.fit.knots());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matches_brute_force(x in small_series()) {
        for k in 1..=x.len() {
            let dp = fit_k(&x, k).unwrap();
            let bf = brute_force_oracle(&x, k).unwrap();
            prop_assert!((dp.sse - bf.sse).abs() <= 1e-9, "k={k}: {} vs {}", dp.sse, bf.sse);
            prop_assert!(dp.k_used <= k);
        }
    }

    #[test]
    fn losses_are_nested(x in medium_series()) {
        let path = fit_all_k(&x).unwrap();
        for k in 1..path.n_hat() {
            prop_assert!(path.loss(k + 1).unwrap() <= path.loss(k).unwrap());
        }
        for k in 1..=x.len() {
            prop_assert!(common::is_nondecreasing(&path.fit(&x, k).unwrap().fitted()));
        }
    }

    #[test]
    fn antitonic_is_mirror(x in small_series()) {
        for k in 1..=x.len() {
            let down = fit_k_antitonic(&x, k).unwrap();
            let up = fit_k(&x.negated(), k).unwrap();
            prop_assert!((down.sse - up.sse).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn knot_properties_hold(x in medium_series()) {
        for k in 1..=x.len() {
            check_knot_properties(&x, k)?;
        }
    }
}

#[test]
fn path_fit_matches_single_fit() {
    let mut rng = common::rng(3);
    for _ in 0..50 {
        let x = Series64::new(common::noisy_trend(&mut rng, 200, 6.0)).unwrap();
        let path = fit_all_k(&x).unwrap();
        for k in [1, 2, 5, 17, 200] {
            assert_eq!(path.fit(&x, k).unwrap().fit, fit_k(&x, k).unwrap().fit);
        }
    }
}
