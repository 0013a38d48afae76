mod common;

use rand::Rng;
use reduced_isotonic::signals::{
    lower_bound_signal, max_lower_bound_ell, sample_noise, staircase_signal, stream_rng, NoiseLaw,
};

fn moments(v: &[f64]) -> (f64, f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = v.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    (mean, m2, m4 / (m2 * m2) - 3.0)
}

#[test]
fn variance_matches_sigma_for_every_law() {
    let laws = [
        NoiseLaw::Gaussian,
        NoiseLaw::Uniform,
        NoiseLaw::GenGaussian { gamma: 1.0 },
        NoiseLaw::GenGaussian { gamma: 0.5 },
        NoiseLaw::GenGaussian { gamma: 2.0 },
    ];
    for (i, law) in laws.into_iter().enumerate() {
        let sigma = 1.7;
        let v = sample_noise(law, 1_000_000, sigma, 100 + i as u64).unwrap();
        let (mean, var, _) = moments(&v);
        assert!(mean.abs() < 0.01 * sigma, "{law:?}: mean {mean}");
        assert!((var / (sigma * sigma) - 1.0).abs() < 0.01, "{law:?}: variance {var}");
    }
}

#[test]
fn laplace_and_uniform_shapes() {
    let lap = sample_noise(NoiseLaw::GenGaussian { gamma: 1.0 }, 1_000_000, 1.0, 5).unwrap();
    let (_, _, excess) = moments(&lap);
    assert!((excess - 3.0).abs() < 0.3, "Laplace excess kurtosis {excess}");

    let gauss = sample_noise(NoiseLaw::GenGaussian { gamma: 2.0 }, 1_000_000, 1.0, 6).unwrap();
    let (_, _, excess) = moments(&gauss);
    assert!(excess.abs() < 0.05, "gamma = 2 excess kurtosis {excess}");

    let uni = sample_noise(NoiseLaw::Uniform, 100_000, 2.0, 7).unwrap();
    let bound = 2.0 * 3f64.sqrt();
    assert!(uni.iter().all(|x| x.abs() <= bound));
}

#[test]
fn same_seed_same_draws() {
    for law in [NoiseLaw::Gaussian, NoiseLaw::GenGaussian { gamma: 0.7 }, NoiseLaw::Uniform] {
        let a = sample_noise(law, 1000, 1.0, 42).unwrap();
        let b = sample_noise(law, 1000, 1.0, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_noise(law, 1000, 1.0, 43).unwrap());
    }
    let mut a = stream_rng(9, &[1, 2, 3]);
    let mut b = stream_rng(9, &[1, 2, 3]);
    let mut c = stream_rng(10, &[1, 2, 3]);
    let (x, y, z): (u64, u64, u64) = (a.random(), b.random(), c.random());
    assert_eq!(x, y);
    assert_ne!(x, z);
}

#[test]
fn signal_shapes() {
    let mut rng = common::rng(1);
    for _ in 0..200 {
        let n = rng.random_range(4..3000);
        let k = rng.random_range(1..=n.min(40));
        let s = staircase_signal(n, k, rng.random_range(0.1..5.0)).unwrap();
        assert_eq!(s.len(), n);
        assert!(common::is_nondecreasing(&s));
        assert_eq!(s.windows(2).filter(|w| w[0] != w[1]).count(), k - 1);

        let ell = rng.random_range(1..=max_lower_bound_ell(n));
        let lb = lower_bound_signal(n, ell, 1.0, 1.0).unwrap();
        assert!(common::is_nondecreasing(&lb));
        assert!(lb.windows(2).filter(|w| w[0] != w[1]).count() <= 1);
    }
}
