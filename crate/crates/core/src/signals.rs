//! Benchmark signals and noise laws.
//!
//! Randomness comes from ChaCha20 (`rand_chacha`). A master seed keys the
//! generator; every `(experiment, cell, replication)` tuple selects its own
//! ChaCha stream via [`stream_rng`], so draws do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// `k` equal blocks at levels `0, delta, 2 delta, ...`; when `k` does not
/// divide `n`, the last `n mod k` blocks are one longer.
pub fn staircase_signal(n: usize, k: usize, delta: f64) -> Result<Vec<f64>> {
    if k == 0 || k > n {
        return Err(Error::Argument(format!("k = {k} outside 1..={n}")));
    }
    let base = n / k;
    let extra = n % k;
    let mut out = Vec::with_capacity(n);
    for j in 0..k {
        let len = base + usize::from(j >= k - extra);
        out.extend(std::iter::repeat_n(j as f64 * delta, len));
    }
    Ok(out)
}

/// Two-piece signal: zero, then `sqrt(alpha sigma^2 2^ell ln(log2 n) / n)` on
/// the last `ceil(n 2^-ell)` entries.
pub fn lower_bound_signal(n: usize, ell: usize, alpha: f64, sigma: f64) -> Result<Vec<f64>> {
    if n < 4 {
        return Err(Error::Argument(format!("n = {n} must be at least 4")));
    }
    let max_ell = max_lower_bound_ell(n);
    if ell == 0 || ell > max_ell {
        return Err(Error::Argument(format!("ell = {ell} outside 1..={max_ell}")));
    }
    if !(alpha >= 0.0 && alpha.is_finite() && sigma.is_finite()) {
        return Err(Error::Argument("alpha must be nonnegative and sigma finite".into()));
    }
    let nf = n as f64;
    let scale = 2f64.powi(ell as i32);
    let height = (alpha * sigma * sigma * scale * nf.log2().ln() / nf).sqrt();
    let tail = (nf / scale).ceil() as usize;
    let mut out = vec![0.0; n];
    for v in &mut out[n - tail..] {
        *v = height;
    }
    Ok(out)
}

/// `ceil(log2 n)`, the largest admissible `ell` for [`lower_bound_signal`].
pub fn max_lower_bound_ell(n: usize) -> usize {
    (n as f64).log2().ceil() as usize
}

/// Linear ramp from 0 to `total_variation`.
pub fn ramp_signal(n: usize, total_variation: f64) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|i| total_variation * i as f64 / (n - 1) as f64)
        .collect()
}

/// Noise distribution, always standardized to variance `sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum NoiseLaw {
    Gaussian,
    /// Density proportional to `exp(-|x / s|^gamma)`, `0 < gamma <= 2`.
    GenGaussian { gamma: f64 },
    Uniform,
}

impl NoiseLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseLaw::GenGaussian { gamma } if !(gamma > 0.0 && gamma <= 2.0) => Err(
                Error::Argument(format!("gamma = {gamma} outside (0, 2]")),
            ),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            NoiseLaw::Gaussian => "gaussian".into(),
            NoiseLaw::GenGaussian { gamma } => format!("gen_gaussian({gamma})"),
            NoiseLaw::Uniform => "uniform".into(),
        }
    }
}

/// `n` unit-variance draws from `law`.
pub fn standard_noise<R: Rng + ?Sized>(law: NoiseLaw, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    law.validate()?;
    Ok(match law {
        NoiseLaw::Gaussian => (0..n).map(|_| StandardNormal.sample(rng)).collect(),
        NoiseLaw::Uniform => {
            let half = 3f64.sqrt();
            (0..n).map(|_| rng.random_range(-half..half)).collect()
        }
        NoiseLaw::GenGaussian { gamma } => {
            // |Z|^gamma ~ Gamma(1/gamma, 1); the variance of Z is Gamma(3/g)/Gamma(1/g).
            let shape = 1.0 / gamma;
            let g = Gamma::new(shape, 1.0).map_err(|e| Error::Argument(e.to_string()))?;
            let s = (0.5 * (ln_gamma(shape) - ln_gamma(3.0 / gamma))).exp();
            (0..n)
                .map(|_| {
                    let mag: f64 = g.sample(rng).powf(shape);
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    sign * s * mag
                })
                .collect()
        }
    })
}

/// `n` draws with variance `sigma^2`, scaled from the unit-variance stream so
/// that the same seed gives proportional samples for every `sigma`.
pub fn sample_noise(law: NoiseLaw, n: usize, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Argument(format!("sigma must be positive, got {sigma}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    sample_noise_with(law, n, sigma, &mut rng)
}

pub fn sample_noise_with<R: Rng + ?Sized>(
    law: NoiseLaw,
    n: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut z = standard_noise(law, n, rng)?;
    for v in &mut z {
        *v *= sigma;
    }
    Ok(z)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha20 generator keyed by `master` on the stream derived from `indices`.
///
/// The stream id is a SplitMix64 fold of the indices.
pub fn stream_rng(master: u64, indices: &[u64]) -> ChaCha20Rng {
    let stream = indices
        .iter()
        .fold(0x6A09_E667_F3BC_C908u64, |acc, &i| splitmix64(acc ^ splitmix64(i)));
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}
