//! Exact reduced isotonic regression: the best nondecreasing fit with at most
//! `k` pieces, for every `k` at once.
//!
//! The optimal knots for any `k` are a subset of the PAVA knots
//! `t_1 < ... < t_{n_hat} = n`, and every optimal level is the plain mean of
//! its block. The search therefore reduces to a Bellman recursion over the
//! PAVA knots with the segment cost
//!
//! ```text
//! Loss(l, j) = SS(j) - SS(l) - (S(j) - S(l))^2 / (t_j - t_l)
//! ```
//!
//! where `S`, `SS` are prefix sums of `x` and `x^2` at the knot positions.
//! Grouping consecutive PAVA blocks (whose means increase) always yields
//! increasing group means, so no monotonicity constraint is needed inside the
//! recursion.

use crate::error::{Error, Result};
use crate::pava::isotonic_fit;
use crate::scalar::{CompensatedSum, Scalar};
use crate::stepfn::{project_to_blocks, FitResult, Method, Monotone, Series, StepFunction};

/// Margin below which two DP candidates count as tied: a few ulps of the total
/// sum of squares, the scale of the rounding error in a prefix-sum cost.
pub(crate) fn tie_tolerance<T: Scalar>(total_ss: T) -> T {
    T::lit(16.0) * T::epsilon() * total_ss.abs()
}

/// Largest series accepted by [`brute_force_oracle`].
pub const BRUTE_FORCE_MAX_LEN: usize = 16;

/// Dynamic-programming tables for every piece budget up to `max_pieces`.
#[derive(Debug, Clone)]
pub struct ReducedPath<T> {
    pava: FitResult<T>,
    /// PAVA knots `t_1..t_{n_hat}`; `t_0 = 0` is implicit.
    knots: Vec<usize>,
    /// `S(j)` and `SS(j)` for `j = 0..=n_hat`, computed on mean-centered data.
    prefix_sum: Vec<T>,
    prefix_sq: Vec<T>,
    /// Row `k - 1` holds `T.Loss(k, j)` for `j = k..=n_hat` at offset `j - k`.
    t_loss: Vec<Vec<T>>,
    /// Same layout as `t_loss`; the optimal previous knot index `l`.
    left_knot: Vec<Vec<usize>>,
}

impl<T: Scalar> ReducedPath<T> {
    /// Runs PAVA and fills the tables for every `k <= n_hat`.
    pub fn build(x: &Series<T>) -> Result<Self> {
        Self::build_up_to(x, x.len())
    }

    /// Like [`build`](Self::build) but stops at `min(k_max, n_hat)` pieces.
    ///
    /// Costs `O(n + k_max * n_hat^2)`.
    pub fn build_up_to(x: &Series<T>, k_max: usize) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::Argument("piece budget must be at least 1".into()));
        }
        if !x.has_unit_weights() {
            return Err(Error::Unsupported(
                "reduced isotonic regression requires unit weights".into(),
            ));
        }
        let pava = isotonic_fit(x)?;
        let knots = pava.fit.knots().to_vec();
        let n_hat = knots.len();

        // Centering leaves every segment cost unchanged and limits cancellation
        // in SS(j) - SS(l).
        let shift = x.mean();
        let mut prefix_sum = Vec::with_capacity(n_hat + 1);
        let mut prefix_sq = Vec::with_capacity(n_hat + 1);
        prefix_sum.push(T::zero());
        prefix_sq.push(T::zero());
        let mut s = CompensatedSum::new();
        let mut ss = CompensatedSum::new();
        let mut start = 0;
        for &t in &knots {
            for &v in &x.values()[start..t] {
                let c = v - shift;
                s.add(c);
                ss.add(c * c);
            }
            prefix_sum.push(s.value());
            prefix_sq.push(ss.value());
            start = t;
        }

        let mut path = Self {
            pava,
            knots,
            prefix_sum,
            prefix_sq,
            t_loss: Vec::new(),
            left_knot: Vec::new(),
        };
        path.fill(k_max.min(n_hat));
        Ok(path)
    }

    fn fill(&mut self, rows: usize) {
        let n_hat = self.n_hat();
        let tol = tie_tolerance(self.prefix_sq[n_hat]);
        let first: Vec<T> = (1..=n_hat).map(|j| self.segment_loss(0, j)).collect();
        self.t_loss.push(first);
        self.left_knot.push(vec![0; n_hat]);
        for k in 2..=rows {
            let prev = &self.t_loss[k - 2];
            let mut row = Vec::with_capacity(n_hat + 1 - k);
            let mut arg = Vec::with_capacity(n_hat + 1 - k);
            for j in k..=n_hat {
                let mut best = T::infinity();
                let mut best_l = k - 1;
                // T.Loss(k-1, l) is defined for l >= k-1. A later split must win
                // by more than rounding noise, so ties go to the leftmost one.
                for l in (k - 1)..j {
                    let cand = prev[l - (k - 1)] + self.segment_loss(l, j);
                    if cand < best - tol {
                        best = cand;
                        best_l = l;
                    }
                }
                row.push(best);
                arg.push(best_l);
            }
            self.t_loss.push(row);
            self.left_knot.push(arg);
        }
    }

    /// Number of PAVA knots.
    pub fn n_hat(&self) -> usize {
        self.knots.len()
    }

    pub fn n(&self) -> usize {
        self.pava.fit.n()
    }

    /// Largest piece budget whose table row was computed.
    pub fn max_pieces(&self) -> usize {
        self.t_loss.len()
    }

    pub fn pava_fit(&self) -> &FitResult<T> {
        &self.pava
    }

    /// The PAVA knot set `t_1..t_{n_hat}` (data positions, 1-based).
    pub fn pava_knots(&self) -> &[usize] {
        &self.knots
    }

    /// Residual of fitting one mean on `(t_l, t_j]`, for `0 <= l < j <= n_hat`.
    #[inline]
    pub fn segment_loss(&self, l: usize, j: usize) -> T {
        let points = self.knots[j - 1] - if l == 0 { 0 } else { self.knots[l - 1] };
        if points == 1 {
            return T::zero();
        }
        let len = T::of(points);
        let s = self.prefix_sum[j] - self.prefix_sum[l];
        let ss = self.prefix_sq[j] - self.prefix_sq[l];
        (ss - s * s / len).max(T::zero())
    }

    /// `T.Loss(k, j)`: minimal loss of a `k`-piece monotone fit of `(0, t_j]`.
    pub fn t_loss(&self, k: usize, j: usize) -> Option<T> {
        (k >= 1 && k <= self.max_pieces() && j >= k && j <= self.n_hat())
            .then(|| self.t_loss[k - 1][j - k])
    }

    /// Backtracking pointer `left.knot(k, j)` as a PAVA knot index (0 = origin).
    pub fn left_knot(&self, k: usize, j: usize) -> Option<usize> {
        (k >= 1 && k <= self.max_pieces() && j >= k && j <= self.n_hat())
            .then(|| self.left_knot[k - 1][j - k])
    }

    fn effective(&self, k: usize) -> Result<usize> {
        if k == 0 {
            return Err(Error::Argument("piece budget must be at least 1".into()));
        }
        let k = k.min(self.n_hat());
        if k > self.max_pieces() {
            return Err(Error::Argument(format!(
                "path was built for at most {} pieces, {} requested",
                self.max_pieces(),
                k
            )));
        }
        Ok(k)
    }

    /// Optimal residual over nondecreasing fits with at most `k` pieces.
    pub fn loss(&self, k: usize) -> Result<T> {
        let k = self.effective(k)?;
        Ok(self.t_loss[k - 1][self.n_hat() - k])
    }

    /// Knot set of the optimal `k`-piece fit, as data positions.
    pub fn knot_set(&self, k: usize) -> Result<Vec<usize>> {
        let k = self.effective(k)?;
        let mut idx = Vec::with_capacity(k);
        let mut cur = self.n_hat();
        idx.push(cur);
        for kk in (2..=k).rev() {
            cur = self.left_knot[kk - 1][cur - kk];
            idx.push(cur);
        }
        idx.reverse();
        Ok(idx.into_iter().map(|j| self.knots[j - 1]).collect())
    }

    /// Best nondecreasing fit of `x` with at most `k` pieces.
    ///
    /// `x` must be the series the path was built from.
    pub fn fit(&self, x: &Series<T>, k: usize) -> Result<FitResult<T>> {
        if x.len() != self.n() {
            return Err(Error::Dimension(format!(
                "path built for length {} but series has length {}",
                self.n(),
                x.len()
            )));
        }
        let keff = self.effective(k)?;
        if keff == self.n_hat() {
            let mut r = self.pava.clone();
            r.method = Method::Reduced;
            return Ok(r);
        }
        let knots = self.knot_set(keff)?;
        let fit = monotone_block_fit(x, &knots)?;
        FitResult::new(fit, x, Method::Reduced)
    }
}

/// Block means on the given knots, forced nondecreasing.
///
/// Means of consecutive groups of PAVA blocks are increasing in exact
/// arithmetic; if rounding breaks that, the means are re-isotonized with block
/// lengths as weights.
fn monotone_block_fit<T: Scalar>(x: &Series<T>, knots: &[usize]) -> Result<StepFunction<T>> {
    let proj = project_to_blocks(x, knots)?;
    match StepFunction::new(
        x.len(),
        knots.to_vec(),
        proj.levels().to_vec(),
        Monotone::Nondecreasing,
    ) {
        Ok(f) => Ok(f),
        Err(_) => {
            let lens: Vec<T> = proj.blocks().map(|(s, e, _)| T::of(e - s)).collect();
            let means = Series::with_weights(proj.levels().to_vec(), lens)?;
            let iso = isotonic_fit(&means)?;
            let mut levels = Vec::with_capacity(knots.len());
            for (s, e, l) in iso.fit.blocks() {
                levels.extend(std::iter::repeat_n(l, e - s));
            }
            StepFunction::new(x.len(), knots.to_vec(), levels, Monotone::Nondecreasing)
        }
    }
}

/// Builds the full path for `x`.
pub fn fit_all_k<T: Scalar>(x: &Series<T>) -> Result<ReducedPath<T>> {
    ReducedPath::build(x)
}

/// Best nondecreasing fit with at most `k` pieces.
pub fn fit_k<T: Scalar>(x: &Series<T>, k: usize) -> Result<FitResult<T>> {
    if k == 0 {
        return Err(Error::Argument("piece budget must be at least 1".into()));
    }
    ReducedPath::build_up_to(x, k)?.fit(x, k)
}

/// Best nonincreasing fit with at most `k` pieces.
pub fn fit_k_antitonic<T: Scalar>(x: &Series<T>, k: usize) -> Result<FitResult<T>> {
    let up = fit_k(&x.negated(), k)?;
    FitResult::new(up.fit.negated(), x, Method::ReducedAntitonic)
}

/// Exhaustive search over every partition into at most `k` consecutive blocks,
/// each isotonized by weighted PAVA on the block means.
///
/// Exponential in `n`; limited to [`BRUTE_FORCE_MAX_LEN`] points.
pub fn brute_force_oracle<T: Scalar>(x: &Series<T>, k: usize) -> Result<FitResult<T>> {
    let n = x.len();
    if n > BRUTE_FORCE_MAX_LEN {
        return Err(Error::Size(format!(
            "brute force handles at most {BRUTE_FORCE_MAX_LEN} points, got {n}"
        )));
    }
    if k == 0 {
        return Err(Error::Argument("piece budget must be at least 1".into()));
    }
    let mut best: Option<(T, Vec<T>)> = None;
    let mut ends = Vec::with_capacity(n);
    for mask in 0u32..(1u32 << (n - 1)) {
        if mask.count_ones() as usize + 1 > k {
            continue;
        }
        ends.clear();
        ends.extend((1..n).filter(|c| mask & (1 << (c - 1)) != 0));
        ends.push(n);
        let mut means = Vec::with_capacity(ends.len());
        let mut weights = Vec::with_capacity(ends.len());
        let mut start = 0;
        for &e in &ends {
            means.push(x.block_mean(start..e));
            weights.push((start..e).map(|i| x.weight(i)).sum());
            start = e;
        }
        let iso = isotonic_fit(&Series::with_weights(means, weights)?)?.fitted();
        let mut fitted = Vec::with_capacity(n);
        let mut start = 0;
        for (&e, &level) in ends.iter().zip(&iso) {
            fitted.extend(std::iter::repeat_n(level, e - start));
            start = e;
        }
        let sse: T = (0..n)
            .map(|i| {
                let r = x.values()[i] - fitted[i];
                x.weight(i) * r * r
            })
            .sum();
        if best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, fitted));
        }
    }
    let (_, fitted) = best.expect("at least the one-block partition is enumerated");
    let fit = StepFunction::from_dense(&fitted, Monotone::Nondecreasing)?;
    FitResult::new(fit, x, Method::BruteForce)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn s(v: &[f64]) -> Series<f64> {
        Series::new(v.to_vec()).unwrap()
    }

    #[test]
    fn two_clusters() {
        let x = s(&[1.0, 2.0, 10.0, 11.0]);
        let path = fit_all_k(&x).unwrap();
        assert_eq!(path.n_hat(), 4);
        assert_abs_diff_eq!(path.t_loss(2, 4).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(path.knot_set(2).unwrap(), vec![2, 4]);

        let r = fit_k(&x, 2).unwrap();
        assert_eq!(r.fitted(), vec![1.5, 1.5, 10.5, 10.5]);
        assert_abs_diff_eq!(r.sse, 1.0, epsilon = 1e-12);

        let r = fit_k(&x, 10).unwrap();
        assert_eq!(r.sse, 0.0);
        assert_eq!(r.fitted(), x.values());
    }

    #[test]
    fn single_pava_block() {
        let x = s(&[3.0, 1.0, 2.0]);
        let path = fit_all_k(&x).unwrap();
        assert_eq!(path.n_hat(), 1);
        for k in 1..=3 {
            assert_eq!(path.knot_set(k).unwrap(), vec![3]);
        }
        assert_abs_diff_eq!(path.t_loss(1, 1).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn increasing_input_has_zero_loss_at_full_budget() {
        let x = s(&[0.5, 1.0, 4.0, 9.0, 9.5]);
        let path = fit_all_k(&x).unwrap();
        for k in 5..8 {
            assert_eq!(path.loss(k).unwrap(), 0.0);
        }
    }

    #[test]
    fn one_piece_is_grand_mean() {
        let x = s(&[4.0, -1.0, 2.5, 7.0, 0.0]);
        let r = fit_k(&x, 1).unwrap();
        let mean = 12.5 / 5.0;
        assert_eq!(r.k_used, 1);
        assert_abs_diff_eq!(r.fit.levels()[0], mean, epsilon = 1e-12);
        let tss: f64 = x.values().iter().map(|v| (v - mean) * (v - mean)).sum();
        assert_abs_diff_eq!(r.sse, tss, epsilon = 1e-12);
    }

    #[test]
    fn brute_force_examples() {
        let r = brute_force_oracle(&s(&[1.0, 2.0, 10.0, 11.0]), 2).unwrap();
        assert_abs_diff_eq!(r.sse, 1.0, epsilon = 1e-12);
        let r = brute_force_oracle(&s(&[5.0]), 1).unwrap();
        assert_eq!(r.fitted(), vec![5.0]);
        assert_eq!(r.sse, 0.0);
        let r = brute_force_oracle(&s(&[2.0, 1.0]), 2).unwrap();
        assert_eq!(r.fitted(), vec![1.5, 1.5]);
        assert_abs_diff_eq!(r.sse, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn errors() {
        let x = s(&[1.0, 2.0]);
        assert!(matches!(fit_k(&x, 0), Err(Error::Argument(_))));
        assert!(matches!(brute_force_oracle(&s(&[0.0; 17]), 2), Err(Error::Size(_))));
        let w = Series::with_weights(vec![1.0, 2.0], vec![1.0, 2.0]).unwrap();
        assert!(matches!(fit_all_k(&w), Err(Error::Unsupported(_))));
        let partial = ReducedPath::build_up_to(&s(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        assert!(partial.loss(2).is_ok());
        assert!(matches!(partial.loss(3), Err(Error::Argument(_))));
    }

    #[test]
    fn antitonic_reduced() {
        let x = s(&[11.0, 10.0, 2.0, 1.0]);
        let r = fit_k_antitonic(&x, 2).unwrap();
        assert_eq!(r.fitted(), vec![10.5, 10.5, 1.5, 1.5]);
        assert_eq!(r.fit.monotone(), Monotone::Nonincreasing);
    }

    #[test]
    fn leftmost_tie_rule() {
        // Splitting [0, 1, 1, 2] into two pieces after index 1 or 3 ties at 2/3;
        // the leftmost split must be chosen.
        let x = s(&[0.0, 1.0, 1.0, 2.0]);
        let path = fit_all_k(&x).unwrap();
        assert_eq!(path.pava_knots(), &[1, 3, 4]);
        assert_eq!(path.knot_set(2).unwrap(), vec![1, 4]);
    }
}
