//! Penalized choice of the number of pieces.
//!
//! The plain penalty is `tau` for one piece and `tau * k * ln ln(16 n / k)`
//! otherwise. The modified penalty replaces the `k = n` value by a data-driven
//! estimate of the isotonic risk, so that the selected fit can fall back to
//! plain isotonic regression when the signal has small total variation.

use crate::error::{Error, Result};
use crate::reduced_iso::ReducedPath;
use crate::scalar::Scalar;
use crate::stepfn::{FitResult, Method, Series};

/// Default multiplier in `tau = c_tau * sigma^2`.
pub const DEFAULT_C_TAU: f64 = 6.0;

/// Consistency constant of the median absolute deviation under Gaussian noise.
const MAD_GAUSSIAN: f64 = 0.6745;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyFamily {
    Plain,
    Modified,
    Segment,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaSpec<T> {
    Known(T),
    Estimate,
}

/// How the penalty and its scale `tau` are chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec<T> {
    pub family: PenaltyFamily,
    /// Explicit `tau`; overrides `c_tau * sigma^2` when set.
    pub tau: Option<T>,
    pub sigma: SigmaSpec<T>,
    pub c_tau: T,
    /// Clamp negative increments of the risk estimate at zero.
    pub clamp_increments: bool,
}

/// `tau` after resolving the noise scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedTau<T> {
    pub tau: T,
    /// Noise level used to derive `tau`, if one was needed.
    pub sigma: Option<T>,
}

impl<T: Scalar> PenaltySpec<T> {
    pub fn new(family: PenaltyFamily) -> Self {
        Self {
            family,
            tau: None,
            sigma: SigmaSpec::Estimate,
            c_tau: T::lit(DEFAULT_C_TAU),
            clamp_increments: true,
        }
    }

    pub fn with_tau(mut self, tau: T) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn with_sigma(mut self, sigma: T) -> Self {
        self.sigma = SigmaSpec::Known(sigma);
        self
    }

    pub fn with_c_tau(mut self, c_tau: T) -> Self {
        self.c_tau = c_tau;
        self
    }

    /// Resolves `tau` for the series `x`.
    ///
    /// An estimated noise level of zero (e.g. a series with no local variation)
    /// falls back to the sample standard deviation, and then to 1.
    pub fn resolve(&self, x: &Series<T>) -> Result<ResolvedTau<T>> {
        if let Some(tau) = self.tau {
            if !(tau > T::zero() && tau.is_finite()) {
                return Err(Error::Argument(format!("tau must be positive, got {tau}")));
            }
            return Ok(ResolvedTau { tau, sigma: None });
        }
        if !(self.c_tau > T::zero() && self.c_tau.is_finite()) {
            return Err(Error::Argument(format!("c_tau must be positive, got {}", self.c_tau)));
        }
        let sigma = match self.sigma {
            SigmaSpec::Known(s) if s > T::zero() && s.is_finite() => s,
            SigmaSpec::Known(s) => {
                return Err(Error::Argument(format!("sigma must be positive, got {s}")))
            }
            SigmaSpec::Estimate => usable_sigma(x),
        };
        Ok(ResolvedTau {
            tau: self.c_tau * sigma * sigma,
            sigma: Some(sigma),
        })
    }
}

/// Positive noise-scale estimate for `x`, with fallbacks for degenerate input.
pub fn usable_sigma<T: Scalar>(x: &Series<T>) -> T {
    let mad = if x.len() >= 2 {
        estimate_sigma(x).unwrap_or(T::zero())
    } else {
        T::zero()
    };
    if mad > T::zero() {
        return mad;
    }
    let n = x.len();
    if n >= 2 {
        let mean = x.mean();
        let var = x
            .values()
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .sum::<T>()
            / T::of(n - 1);
        if var > T::zero() {
            return var.sqrt();
        }
    }
    T::one()
}

fn check_tau<T: Scalar>(tau: T) -> Result<()> {
    if tau > T::zero() && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("tau must be positive, got {tau}")))
    }
}

/// Iterated-logarithm penalty for a `k`-piece fit of `n` points.
pub fn pen<T: Scalar>(k: usize, n: usize, tau: T) -> Result<T> {
    if k == 0 || k > n {
        return Err(Error::Argument(format!("k = {k} outside 1..={n}")));
    }
    check_tau(tau)?;
    if k == 1 {
        return Ok(tau);
    }
    let ratio = T::lit(16.0) * T::of(n) / T::of(k);
    Ok(tau * T::of(k) * ratio.ln().ln())
}

/// Data-driven risk proxy `l_hat(m)`.
///
/// Compares the mean of `x` over the 1-based window `[n - m, n - m/2)` with the
/// mean over `(1 + m/2, 1 + m]`, taking the integer indices inside each real
/// interval. Returns `n` when `2m > n` or when a window is empty or falls
/// outside the series.
pub fn l_hat<T: Scalar>(x: &Series<T>, m: usize, tau: T) -> Result<T> {
    if m == 0 {
        return Err(Error::Argument("window size m must be at least 1".into()));
    }
    check_tau(tau)?;
    let n = x.len();
    let clamp = T::of(n);
    if 2 * m > n {
        return Ok(clamp);
    }
    // Work in doubled coordinates so that m/2 stays integral.
    // Right window: n - m <= i < n - m/2  <=>  2(n - m) <= 2i < 2n - m.
    let right: Vec<usize> = (1..=n)
        .filter(|&i| 2 * i >= 2 * (n - m) && 2 * i < 2 * n - m)
        .collect();
    // Left window: 1 + m/2 < i <= 1 + m  <=>  2 + m < 2i <= 2 + 2m.
    let left: Vec<usize> = (1..=n)
        .filter(|&i| 2 * i > 2 + m && 2 * i <= 2 + 2 * m)
        .collect();
    if right.is_empty() || left.is_empty() {
        return Ok(clamp);
    }
    let mean = |idx: &[usize]| {
        idx.iter().map(|&i| x.values()[i - 1]).sum::<T>() / T::of(idx.len())
    };
    let m_t = T::of(m);
    let diff = mean(&right) - mean(&left);
    let raw = T::lit(3.0) * m_t + m_t * (m_t + T::one()).sqrt() * diff / tau.sqrt();
    Ok(raw.min(clamp))
}

/// The `k = n` branch of the modified penalty.
pub fn modified_pen_full<T: Scalar>(x: &Series<T>, tau: T, clamp_increments: bool) -> Result<T> {
    check_tau(tau)?;
    let n = x.len();
    let e_n = (T::of(n) * T::one().exp()).ln();
    let mut total = T::zero();
    let mut ell = 0u32;
    // 2^ell <= n / 3
    while 3usize
        .checked_mul(1usize << ell)
        .is_some_and(|v| v <= n)
    {
        let m = 1usize << ell;
        let mut inc = l_hat(x, 2 * m, tau)? - l_hat(x, m, tau)?;
        if clamp_increments {
            inc = inc.max(T::zero());
        }
        total += inc / T::of(2 * m);
        ell += 1;
    }
    Ok(tau * (e_n + total))
}

/// Modified penalty: `tau` for one piece, [`pen`] for `2..n-1` pieces and a
/// data-driven isotonic risk estimate for `n` pieces.
pub fn modified_pen<T: Scalar>(x: &Series<T>, k: usize, tau: T) -> Result<T> {
    modified_pen_with(x, k, tau, true)
}

pub fn modified_pen_with<T: Scalar>(
    x: &Series<T>,
    k: usize,
    tau: T,
    clamp_increments: bool,
) -> Result<T> {
    let n = x.len();
    if k == 0 || k > n {
        return Err(Error::Argument(format!("k = {k} outside 1..={n}")));
    }
    check_tau(tau)?;
    match k {
        1 => Ok(tau),
        k if k == n => modified_pen_full(x, tau, clamp_increments),
        k => pen(k, n, tau),
    }
}

/// Minimizes `loss(k) + penalty(k)` over `k` in `1..=n` and returns the fit.
///
/// `path` must be the full path of `x` (built for every `k <= n_hat`). Losses
/// are constant for `k >= n_hat`, so only `1..=n_hat` and `n` are compared.
pub fn select_k<T: Scalar>(
    path: &ReducedPath<T>,
    x: &Series<T>,
    spec: &PenaltySpec<T>,
) -> Result<FitResult<T>> {
    let method = match spec.family {
        PenaltyFamily::Plain => Method::Adaptive,
        PenaltyFamily::Modified => Method::AdaptiveModified,
        PenaltyFamily::Segment => {
            return Err(Error::Unsupported(
                "segment penalties are handled by segment_dp::segment_select_k".into(),
            ))
        }
    };
    let n = x.len();
    if path.n() != n {
        return Err(Error::Dimension(format!(
            "path built for length {} but series has length {}",
            path.n(),
            n
        )));
    }
    if path.max_pieces() < path.n_hat() {
        return Err(Error::Argument(
            "selection needs a path built for every piece count".into(),
        ));
    }
    let tau = spec.resolve(x)?.tau;
    let penalty = |k: usize| match spec.family {
        PenaltyFamily::Modified => modified_pen_with(x, k, tau, spec.clamp_increments),
        _ => pen(k, n, tau),
    };

    let mut best: Option<(usize, T, T)> = None;
    let candidates = (1..=path.n_hat()).chain((path.n_hat() < n).then_some(n));
    for k in candidates {
        let p = penalty(k)?;
        let obj = path.loss(k)? + p;
        if best.is_none_or(|(_, b, _)| obj < b) {
            best = Some((k, obj, p));
        }
    }
    let (k_hat, objective, p) = best.expect("candidate set is nonempty");
    let mut fit = path.fit(x, k_hat)?;
    fit.method = method;
    fit.penalty = Some(p);
    fit.k_selected = Some(k_hat);
    fit.objective = Some(objective);
    Ok(fit)
}

/// Median absolute first difference divided by `0.6745 * sqrt(2)`.
pub fn estimate_sigma<T: Scalar>(x: &Series<T>) -> Result<T> {
    let v = x.values();
    if v.len() < 2 {
        return Err(Error::Argument("noise estimation needs at least two points".into()));
    }
    let mut diffs: Vec<T> = v.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    diffs.sort_by(|a, b| a.partial_cmp(b).expect("finite differences"));
    let m = diffs.len();
    let median = if m % 2 == 1 {
        diffs[m / 2]
    } else {
        (diffs[m / 2 - 1] + diffs[m / 2]) / T::lit(2.0)
    };
    Ok(median / (T::lit(MAD_GAUSSIAN) * T::lit(2.0).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduced_iso::fit_all_k;
    use approx::assert_abs_diff_eq;

    fn s(v: &[f64]) -> Series<f64> {
        Series::new(v.to_vec()).unwrap()
    }

    #[test]
    fn pen_examples() {
        assert_eq!(pen(1, 100, 2.0).unwrap(), 2.0);
        let expected = 2.0 * 128f64.ln().ln();
        assert_abs_diff_eq!(pen(2, 16, 1.0).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(pen(2, 16, 1.0).unwrap(), 3.1588, epsilon = 1e-4);
        assert_abs_diff_eq!(pen(50, 50, 1.0).unwrap(), 50.0 * 16f64.ln().ln(), epsilon = 1e-12);
        assert!(pen(0, 5, 1.0).is_err());
        assert!(pen(6, 5, 1.0).is_err());
        assert!(pen(1, 5, 0.0).is_err());
    }

    #[test]
    fn pen_increasing_in_k() {
        for n in [2usize, 3, 10, 100, 1000] {
            for k in 2..n {
                assert!(pen(k + 1, n, 1.0).unwrap() > pen(k, n, 1.0).unwrap(), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn l_hat_examples() {
        let c = s(&[3.0; 20]);
        for m in [1usize, 2, 4, 6] {
            assert_abs_diff_eq!(l_hat(&c, m, 1.0).unwrap(), (3 * m).min(20) as f64, epsilon = 1e-12);
        }
        let mut v = vec![0.0; 8];
        v.extend([1.0; 8]);
        assert_eq!(l_hat(&s(&v), 4, 1.0).unwrap(), 16.0);
        assert_eq!(l_hat(&c, 11, 1.0).unwrap(), 20.0);
    }

    #[test]
    fn l_hat_window_indices() {
        // x_i = i; for m = 4, n = 16: right window {12, 13}, left window {4, 5}.
        let x = s(&(1..=16).map(f64::from).collect::<Vec<_>>());
        let expected = 12.0 + 4.0 * 5f64.sqrt() * (12.5 - 4.5) / 100f64.sqrt();
        assert_abs_diff_eq!(l_hat(&x, 4, 100.0).unwrap(), expected.min(16.0), epsilon = 1e-12);
        // m = 1: windows {n - 1} and {2}.
        let expected = 3.0 + 2f64.sqrt() * (15.0 - 2.0) / 100f64.sqrt();
        assert_abs_diff_eq!(l_hat(&x, 1, 100.0).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn modified_pen_examples() {
        let x = s(&[0.0; 16]);
        assert_eq!(modified_pen(&x, 1, 1.5).unwrap(), 1.5);
        assert_abs_diff_eq!(modified_pen(&x, 2, 1.0).unwrap(), 3.1588, epsilon = 1e-4);
        for k in 2..16 {
            assert_eq!(modified_pen(&x, k, 1.0).unwrap(), pen(k, 16, 1.0).unwrap());
        }
        // Noiseless constant: l_hat(m) = min(16, 3m); ell = 0..=2 since 2^ell <= 16/3.
        let lh = |m: f64| (3.0 * m).min(16.0);
        let sum: f64 = [1.0, 2.0, 4.0].iter().map(|&m| (lh(2.0 * m) - lh(m)) / (2.0 * m)).sum();
        let expected = (16.0 * std::f64::consts::E).ln() + sum;
        assert_abs_diff_eq!(modified_pen(&x, 16, 1.0).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn modified_pen_clamp_toggle() {
        // A decreasing series makes the raw increments negative.
        let x = s(&(0..40).map(|i| -(i as f64)).collect::<Vec<_>>());
        let clamped = modified_pen_with(&x, 40, 1.0, true).unwrap();
        let raw = modified_pen_with(&x, 40, 1.0, false).unwrap();
        assert!(clamped >= (40.0 * std::f64::consts::E).ln());
        assert!(raw < clamped);
    }

    #[test]
    fn select_examples() {
        let mut v = vec![0.0; 50];
        v.extend([5.0; 50]);
        let x = s(&v);
        let path = fit_all_k(&x).unwrap();
        for tau in [0.1, 1.0, 10.0] {
            let r = select_k(&path, &x, &PenaltySpec::new(PenaltyFamily::Plain).with_tau(tau)).unwrap();
            assert_eq!(r.k_selected, Some(2));
            assert_eq!(r.sse, 0.0);
        }

        let c = s(&[2.0; 30]);
        let path = fit_all_k(&c).unwrap();
        let r = select_k(&path, &c, &PenaltySpec::new(PenaltyFamily::Plain)).unwrap();
        assert_eq!(r.k_selected, Some(1));

        let x = s(&[1.0, 2.0, 10.0, 11.0]);
        let path = fit_all_k(&x).unwrap();
        let r = select_k(&path, &x, &PenaltySpec::new(PenaltyFamily::Plain).with_tau(100.0)).unwrap();
        assert_eq!(r.k_selected, Some(1));
        // One piece at mean 6 leaves 25 + 16 + 16 + 25.
        assert_abs_diff_eq!(r.objective.unwrap(), 82.0 + 100.0, epsilon = 1e-9);

        let seg = PenaltySpec::new(PenaltyFamily::Segment);
        assert!(matches!(select_k(&path, &x, &seg), Err(Error::Unsupported(_))));
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(estimate_sigma(&s(&[4.0; 10])).unwrap(), 0.0);
        let est = estimate_sigma(&s(&[0.0, 1.0, 0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(est, 1.0 / (0.6745 * 2f64.sqrt()), epsilon = 1e-12);
        assert_abs_diff_eq!(est, 1.0484, epsilon = 1e-4);
        assert!(estimate_sigma(&s(&[1.0])).is_err());
    }

    #[test]
    fn resolve_fallbacks() {
        let c = s(&[2.0; 10]);
        let r = PenaltySpec::new(PenaltyFamily::Plain).resolve(&c).unwrap();
        assert_eq!(r.sigma, Some(1.0));
        assert_eq!(r.tau, DEFAULT_C_TAU);
        let r = PenaltySpec::new(PenaltyFamily::Plain).with_sigma(2.0).resolve(&c).unwrap();
        assert_eq!(r.tau, 4.0 * DEFAULT_C_TAU);
        assert!(PenaltySpec::new(PenaltyFamily::Plain).with_tau(-1.0).resolve(&c).is_err());
    }
}
