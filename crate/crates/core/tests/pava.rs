mod common;

use std::time::Instant;

use proptest::prelude::*;
use reduced_isotonic::pava::{antitonic_fit, isotonic_fit, minmax_reference};
use reduced_isotonic::Series64;

fn weighted_series() -> impl Strategy<Value = Series64> {
    (1usize..=200).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![(-50i32..50).prop_map(f64::from), -50.0f64..50.0], n),
            prop::collection::vec(0.01f64..10.0, n),
        )
            .prop_map(|(v, w)| Series64::with_weights(v, w).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn agrees_with_minmax_formula(x in weighted_series()) {
        let fit = isotonic_fit(&x).unwrap().fitted();
        for i in 1..=x.len() {
            let want = minmax_reference(&x, i).unwrap();
            prop_assert!((fit[i - 1] - want).abs() <= 1e-10, "i={i}: {} vs {want}", fit[i - 1]);
        }
    }

    #[test]
    fn levels_strictly_increase(x in weighted_series()) {
        let r = isotonic_fit(&x).unwrap();
        prop_assert!(r.fit.levels().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(common::is_nondecreasing(&r.fitted()));
    }

    #[test]
    fn levels_are_weighted_block_means(x in weighted_series()) {
        let r = isotonic_fit(&x).unwrap();
        for (s, e, level) in r.fit.blocks() {
            let m = x.block_mean(s..e);
            prop_assert!((level - m).abs() <= 1e-10 * (1.0 + m.abs()));
        }
    }

    #[test]
    fn idempotent(x in weighted_series()) {
        let once = isotonic_fit(&x).unwrap().fitted();
        let again = isotonic_fit(&Series64::new(once.clone()).unwrap()).unwrap().fitted();
        prop_assert_eq!(once, again);
    }

    #[test]
    fn antitonic_mirrors_isotonic(x in weighted_series()) {
        let down = antitonic_fit(&x).unwrap().fitted();
        let up = isotonic_fit(&x.negated()).unwrap().fitted();
        for (a, b) in down.iter().zip(&up) {
            prop_assert_eq!(*a, -*b);
        }
    }
}

#[test]
fn runtime_is_linear() {
    let mut rng = common::rng(7);
    let per_point: Vec<f64> = [10_000usize, 100_000, 1_000_000]
        .iter()
        .map(|&n| {
            let x = Series64::new(common::noisy_trend(&mut rng, n, 10.0)).unwrap();
            let reps = 2_000_000 / n;
            let best = (0..reps.max(3))
                .map(|_| {
                    let t = Instant::now();
                    std::hint::black_box(isotonic_fit(&x).unwrap());
                    t.elapsed().as_secs_f64()
                })
                .fold(f64::INFINITY, f64::min);
            best / n as f64
        })
        .collect();
    let hi = per_point.iter().cloned().fold(0.0, f64::max);
    let lo = per_point.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi / lo < 3.0, "per-point times {per_point:?}");
}
