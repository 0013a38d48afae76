mod common;

use proptest::prelude::*;
use reduced_isotonic::stepfn::project_to_blocks;
use reduced_isotonic::{Monotone, Series64, StepFunction64};

fn series_and_ends() -> impl Strategy<Value = (Vec<f64>, Vec<usize>)> {
    (1usize..=100).prop_flat_map(|n| {
        (
            prop::collection::vec(-1e3f64..1e3, n),
            prop::collection::btree_set(1..n.max(2), 0..n.min(12)),
        )
            .prop_map(move |(x, cuts)| {
                let mut ends: Vec<usize> = cuts.into_iter().filter(|&c| c < n).collect();
                ends.push(n);
                (x, ends)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn projection_sse_matches_two_pass((x, ends) in series_and_ends()) {
        let s = Series64::new(x.clone()).unwrap();
        let f = project_to_blocks(&s, &ends).unwrap();
        let got = f.sse(&s).unwrap();
        let want = common::two_pass_sse(&x, &ends);
        prop_assert!((got - want).abs() <= 1e-10 * (1.0 + want), "{got} vs {want}");
    }

    #[test]
    fn sse_zero_only_on_exact_fit((x, ends) in series_and_ends()) {
        let s = Series64::new(x.clone()).unwrap();
        let f = project_to_blocks(&s, &ends).unwrap();
        let sse = f.sse(&s).unwrap();
        prop_assert!(sse >= 0.0);
        let exact = (1..=x.len()).all(|i| f.evaluate(i).unwrap() == x[i - 1]);
        prop_assert_eq!(sse == 0.0, exact);

        let dense = StepFunction64::from_dense(&x, Monotone::Unconstrained).unwrap();
        prop_assert_eq!(dense.sse(&s).unwrap(), 0.0);
    }

    #[test]
    fn evaluate_is_constant_on_blocks((x, ends) in series_and_ends()) {
        let s = Series64::new(x).unwrap();
        let f = project_to_blocks(&s, &ends).unwrap();
        for (start, end, level) in f.blocks() {
            for i in start + 1..=end {
                prop_assert_eq!(f.evaluate(i).unwrap().to_bits(), level.to_bits());
            }
        }
        prop_assert_eq!(f.to_dense().len(), s.len());
    }
}
