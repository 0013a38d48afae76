//! Unimodal step fits: per-mode candidates and their exponential-weight
//! aggregate under sample splitting.
//!
//! A candidate indexed by `(u, v, ell)` is the best nondecreasing fit with at
//! most `u` pieces on the first `ell` points, followed by the best
//! nonincreasing fit with at most `v` pieces on the rest. The aggregate draws
//! `W ~ N(0, sigma^2 I)`, fits every candidate on `U = X + W`, and weights
//! them by `exp(-|V - candidate|^2 / (8 sigma^2))` with `V = X - W`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::reduced_iso::ReducedPath;
use crate::scalar::{CompensatedSum, Scalar};
use crate::stepfn::{FitResult, Method, Monotone, Series, StepFunction};

/// Split of a piece budget around a mode position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OmegaIndex {
    /// Pieces on the nondecreasing side `(0, ell]`.
    pub u: usize,
    /// Pieces on the nonincreasing side `(ell, n]`.
    pub v: usize,
    /// Mode position, `0..=n`.
    pub ell: usize,
}

impl OmegaIndex {
    /// True when each nonempty side gets at least one piece.
    pub fn is_admissible(&self, n: usize) -> bool {
        self.ell <= n
            && self.u <= self.ell
            && self.v <= n - self.ell
            && (self.u > 0 || self.ell == 0)
            && (self.v > 0 || self.ell == n)
    }
}

/// All `(u, v, ell)` with `u + v = k`, `u <= ell`, `v <= n - ell`, in
/// lexicographic order. Includes triples that leave a nonempty side with zero
/// pieces; see [`OmegaIndex::is_admissible`].
pub fn enumerate_omega(k: usize, n: usize) -> Vec<OmegaIndex> {
    let mut out = Vec::new();
    for u in 0..=k.min(n) {
        let v = k - u;
        if v > n {
            continue;
        }
        for ell in u..=(n - v) {
            out.push(OmegaIndex { u, v, ell });
        }
    }
    out
}

fn check_omega(w: &OmegaIndex, n: usize) -> Result<()> {
    if w.u + w.v == 0 {
        return Err(Error::Argument("piece budget u + v must be positive".into()));
    }
    if !w.is_admissible(n) {
        return Err(Error::Argument(format!(
            "({}, {}, {}) leaves a side without pieces or exceeds n = {n}",
            w.u, w.v, w.ell
        )));
    }
    Ok(())
}

/// Reduced isotonic paths for one mode position: left side on `x[..ell]`,
/// right side on the negated `x[ell..]`.
struct SidePaths<T> {
    left: Option<(Series<T>, ReducedPath<T>)>,
    right: Option<(Series<T>, ReducedPath<T>)>,
}

impl<T: Scalar> SidePaths<T> {
    fn build(x: &Series<T>, ell: usize, u_max: usize, v_max: usize) -> Result<Self> {
        let n = x.len();
        let left = if ell > 0 && u_max > 0 {
            let s = x.slice(0..ell)?;
            let p = ReducedPath::build_up_to(&s, u_max)?;
            Some((s, p))
        } else {
            None
        };
        let right = if ell < n && v_max > 0 {
            let s = x.slice(ell..n)?.negated();
            let p = ReducedPath::build_up_to(&s, v_max)?;
            Some((s, p))
        } else {
            None
        };
        Ok(Self { left, right })
    }

    fn candidate(&self, n: usize, w: &OmegaIndex) -> Result<StepFunction<T>> {
        let mut knots = Vec::new();
        let mut levels = Vec::new();
        if let Some((s, p)) = &self.left {
            let f = p.fit(s, w.u)?;
            knots.extend_from_slice(f.fit.knots());
            levels.extend_from_slice(f.fit.levels());
        }
        if let Some((s, p)) = &self.right {
            let f = p.fit(s, w.v)?;
            knots.extend(f.fit.knots().iter().map(|a| a + w.ell));
            levels.extend(f.fit.levels().iter().map(|&l| -l));
        }
        StepFunction::new(n, knots, levels, Monotone::Unconstrained)
    }
}

/// Unimodal candidate for one `(u, v, ell)`.
pub fn unimodal_fit_mode<T: Scalar>(x: &Series<T>, w: &OmegaIndex) -> Result<FitResult<T>> {
    let n = x.len();
    check_omega(w, n)?;
    let sides = SidePaths::build(x, w.ell, w.u, w.v)?;
    FitResult::new(sides.candidate(n, w)?, x, Method::UnimodalMode)
}

/// Normalized weights `exp(-(r - min r) / temperature)`.
pub fn exponential_weights<T: Scalar>(residuals: &[T], temperature: T) -> Vec<T> {
    let floor = residuals.iter().copied().fold(T::infinity(), T::min);
    let raw: Vec<T> = residuals
        .iter()
        .map(|&r| (-(r - floor) / temperature).exp())
        .collect();
    let total = raw.iter().copied().collect::<CompensatedSum<T>>().value();
    raw.into_iter().map(|v| v / total).collect()
}

/// Output of [`unimodal_aggregate`].
#[derive(Debug, Clone)]
pub struct UnimodalAggregate<T> {
    /// The aggregate, with `sse` measured against the input series.
    pub result: FitResult<T>,
    /// Admissible indices, in enumeration order.
    pub omegas: Vec<OmegaIndex>,
    /// Candidate fits on `U`, aligned with `omegas`.
    pub candidates: Vec<Vec<T>>,
    /// `|V - candidate|^2`, aligned with `omegas`.
    pub residuals: Vec<T>,
    /// Aggregation weights, aligned with `omegas`.
    pub weights: Vec<T>,
}

/// Exponential-weight aggregate over all admissible unimodal candidates with
/// `k` pieces, using a uniform prior.
pub fn unimodal_aggregate<T: Scalar>(
    x: &Series<T>,
    k: usize,
    sigma: T,
    seed: u64,
) -> Result<UnimodalAggregate<T>> {
    if !(sigma > T::zero() && sigma.is_finite()) {
        return Err(Error::Argument(format!("sigma must be positive, got {sigma}")));
    }
    if k == 0 {
        return Err(Error::Argument("piece budget must be at least 1".into()));
    }
    if !x.has_unit_weights() {
        return Err(Error::Unsupported("unimodal aggregation requires unit weights".into()));
    }
    let n = x.len();
    let sigma_f = sigma
        .to_f64()
        .ok_or_else(|| Error::Argument("sigma not representable".into()))?;
    let normal = Normal::new(0.0, sigma_f).map_err(|e| Error::Argument(e.to_string()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let noise: Vec<T> = (0..n).map(|_| T::lit(normal.sample(&mut rng))).collect();
    let u_vals: Vec<T> = x.values().iter().zip(&noise).map(|(&a, &b)| a + b).collect();
    let v_vals: Vec<T> = x.values().iter().zip(&noise).map(|(&a, &b)| a - b).collect();
    let u_series = Series::new(u_vals)?;

    let omegas: Vec<OmegaIndex> = enumerate_omega(k, n)
        .into_iter()
        .filter(|w| w.is_admissible(n))
        .collect();
    if omegas.is_empty() {
        return Err(Error::Argument(format!("no admissible split of {k} pieces over {n} points")));
    }

    // One pair of paths per mode position serves every (u, v) at that position.
    let per_mode: Vec<Result<SidePaths<T>>> = (0..=n)
        .into_par_iter()
        .map(|ell| SidePaths::build(&u_series, ell, k.min(ell), k.min(n - ell)))
        .collect();
    let per_mode: Vec<SidePaths<T>> = per_mode.into_iter().collect::<Result<_>>()?;

    let candidates: Vec<Vec<T>> = omegas
        .par_iter()
        .map(|w| per_mode[w.ell].candidate(n, w).map(|f| f.to_dense()))
        .collect::<Result<_>>()?;
    let residuals: Vec<T> = candidates
        .iter()
        .map(|c| {
            c.iter()
                .zip(&v_vals)
                .map(|(&a, &b)| (b - a) * (b - a))
                .collect::<CompensatedSum<T>>()
                .value()
        })
        .collect();
    let weights = exponential_weights(&residuals, T::lit(8.0) * sigma * sigma);

    let mut agg = vec![CompensatedSum::new(); n];
    for (c, &lambda) in candidates.iter().zip(&weights) {
        for (acc, &v) in agg.iter_mut().zip(c) {
            acc.add(lambda * v);
        }
    }
    let agg: Vec<T> = agg.iter().map(CompensatedSum::value).collect();
    let fit = StepFunction::from_dense(&agg, Monotone::Unconstrained)?;
    let result = FitResult::new(fit, x, Method::UnimodalAggregate)?;
    Ok(UnimodalAggregate {
        result,
        omegas,
        candidates,
        residuals,
        weights,
    })
}
