#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use reduced_isotonic::Series64;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gauss<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Values from `{0, 1, 2, 3, 4}` (many ties) or continuous N(0, 4) draws.
pub fn random_values<R: Rng>(rng: &mut R, n: usize, grid: bool) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if grid {
                rng.random_range(0..5) as f64
            } else {
                2.0 * gauss(rng)
            }
        })
        .collect()
}

pub fn random_series<R: Rng>(rng: &mut R, n: usize, grid: bool) -> Series64 {
    Series64::new(random_values(rng, n, grid)).unwrap()
}

pub fn random_weighted<R: Rng>(rng: &mut R, n: usize) -> Series64 {
    let grid = rng.random_bool(0.5);
    let values = random_values(rng, n, grid);
    let weights = (0..n).map(|_| rng.random_range(0.05..5.0)).collect();
    Series64::with_weights(values, weights).unwrap()
}

/// Noisy increasing trend, the typical input shape for isotonic fits.
pub fn noisy_trend<R: Rng>(rng: &mut R, n: usize, slope: f64) -> Vec<f64> {
    (0..n)
        .map(|i| slope * i as f64 / n as f64 + gauss(rng))
        .collect()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Within-block sum of squares by two passes (mean, then squared deviations).
pub fn two_pass_sse(x: &[f64], ends: &[usize]) -> f64 {
    let mut start = 0;
    let mut total = 0.0;
    for &end in ends {
        let block = &x[start..end];
        let m = mean(block);
        total += block.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
        start = end;
    }
    total
}

/// Every set of right endpoints of a partition of `1..=n` into at most `k` blocks.
pub fn partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << (n - 1)) {
        if mask.count_ones() as usize + 1 > k {
            continue;
        }
        let mut ends: Vec<usize> = (1..n).filter(|&i| mask >> (i - 1) & 1 == 1).collect();
        ends.push(n);
        out.push(ends);
    }
    out
}

/// Least-squares piecewise-constant fit with at most `k` pieces, by enumeration.
pub fn segment_brute(x: &[f64], k: usize) -> f64 {
    partitions(x.len(), k)
        .iter()
        .map(|ends| two_pass_sse(x, ends))
        .fold(f64::INFINITY, f64::min)
}

pub fn is_nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}
