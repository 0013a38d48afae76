//! Unconstrained piecewise-constant least squares by segment-neighbourhood
//! dynamic programming, `O(n^2 k)`.

use crate::error::{Error, Result};
use crate::reduced_iso::tie_tolerance;
use crate::scalar::{CompensatedSum, Scalar};
use crate::stepfn::{project_to_blocks, FitResult, Method, Series};

/// Default cap on the number of pieces searched by [`segment_select_k`] callers.
pub const DEFAULT_K_MAX: usize = 64;

/// Loss and backpointer tables for every `k <= k_max` and prefix length.
#[derive(Debug, Clone)]
pub struct SegmentPath<T> {
    n: usize,
    prefix_w: Vec<T>,
    prefix_s: Vec<T>,
    prefix_ss: Vec<T>,
    /// Row `k - 1`: minimal SSE of a `k`-piece fit of `x[..j]` for `j = k..=n`, at offset `j - k`.
    cost: Vec<Vec<T>>,
    back: Vec<Vec<usize>>,
}

impl<T: Scalar> SegmentPath<T> {
    fn new(x: &Series<T>) -> Self {
        let shift = x.mean();
        let n = x.len();
        let mut prefix_w = Vec::with_capacity(n + 1);
        let mut prefix_s = Vec::with_capacity(n + 1);
        let mut prefix_ss = Vec::with_capacity(n + 1);
        let (mut w, mut s, mut ss) = (
            CompensatedSum::new(),
            CompensatedSum::new(),
            CompensatedSum::new(),
        );
        prefix_w.push(T::zero());
        prefix_s.push(T::zero());
        prefix_ss.push(T::zero());
        for (i, &v) in x.values().iter().enumerate() {
            let wi = x.weight(i);
            let c = v - shift;
            w.add(wi);
            s.add(wi * c);
            ss.add(wi * c * c);
            prefix_w.push(w.value());
            prefix_s.push(s.value());
            prefix_ss.push(ss.value());
        }
        Self {
            n,
            prefix_w,
            prefix_s,
            prefix_ss,
            cost: Vec::new(),
            back: Vec::new(),
        }
    }

    /// Weighted within-block sum of squares of `x[i..j]`.
    #[inline]
    pub fn block_cost(&self, i: usize, j: usize) -> T {
        if j == i + 1 {
            return T::zero();
        }
        let w = self.prefix_w[j] - self.prefix_w[i];
        let s = self.prefix_s[j] - self.prefix_s[i];
        let ss = self.prefix_ss[j] - self.prefix_ss[i];
        (ss - s * s / w).max(T::zero())
    }

    pub fn k_max(&self) -> usize {
        self.cost.len()
    }

    /// Minimal SSE of a `k`-piece fit of the first `j` points.
    pub fn prefix_sse(&self, k: usize, j: usize) -> Option<T> {
        (k >= 1 && k <= self.k_max() && j >= k && j <= self.n).then(|| self.cost[k - 1][j - k])
    }

    /// Minimal SSE of a `k`-piece fit of the whole series.
    pub fn sse(&self, k: usize) -> Result<T> {
        self.check_k(k)?;
        Ok(self.cost[k - 1][self.n - k])
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.k_max() {
            return Err(Error::Argument(format!("k = {k} outside 1..={}", self.k_max())));
        }
        Ok(())
    }

    /// Right endpoints (1-based) of the optimal `k`-piece partition.
    pub fn breakpoints(&self, k: usize) -> Result<Vec<usize>> {
        self.check_k(k)?;
        let mut out = vec![self.n];
        let mut j = self.n;
        for kk in (2..=k).rev() {
            j = self.back[kk - 1][j - kk];
            out.push(j);
        }
        out.reverse();
        Ok(out)
    }

    pub fn fit(&self, x: &Series<T>, k: usize) -> Result<FitResult<T>> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!(
                "path built for length {} but series has length {}",
                self.n,
                x.len()
            )));
        }
        let f = project_to_blocks(x, &self.breakpoints(k)?)?;
        FitResult::new(f, x, Method::Segment)
    }
}

/// Fills the segment-neighbourhood tables up to `k_max` pieces.
pub fn segment_fit_all_k<T: Scalar>(x: &Series<T>, k_max: usize) -> Result<SegmentPath<T>> {
    let n = x.len();
    if k_max == 0 || k_max > n {
        return Err(Error::Argument(format!("k_max = {k_max} outside 1..={n}")));
    }
    let mut path = SegmentPath::new(x);
    let tol = tie_tolerance(path.prefix_ss[n]);
    path.cost.push((1..=n).map(|j| path.block_cost(0, j)).collect());
    path.back.push(vec![0; n]);
    for k in 2..=k_max {
        let prev = &path.cost[k - 2];
        let mut row = Vec::with_capacity(n + 1 - k);
        let mut arg = Vec::with_capacity(n + 1 - k);
        for j in k..=n {
            let mut best = T::infinity();
            let mut best_i = k - 1;
            for i in (k - 1)..j {
                let c = prev[i - (k - 1)] + path.block_cost(i, j);
                if c < best - tol {
                    best = c;
                    best_i = i;
                }
            }
            row.push(best);
            arg.push(best_i);
        }
        path.cost.push(row);
        path.back.push(arg);
    }
    Ok(path)
}

/// Best unconstrained fit with exactly `k` pieces.
pub fn segment_fit_k<T: Scalar>(x: &Series<T>, k: usize) -> Result<FitResult<T>> {
    segment_fit_all_k(x, k)?.fit(x, k)
}

/// Penalty shaped like the minimax rate of the unconstrained class:
/// `tau`, `tau ln ln(16n)`, then `tau k ln(e n / k)` for `k >= 3`.
pub fn segment_pen<T: Scalar>(k: usize, n: usize, tau: T) -> Result<T> {
    if k == 0 || k > n {
        return Err(Error::Argument(format!("k = {k} outside 1..={n}")));
    }
    if !(tau > T::zero() && tau.is_finite()) {
        return Err(Error::Argument(format!("tau must be positive, got {tau}")));
    }
    let n_t = T::of(n);
    Ok(match k {
        1 => tau,
        2 => tau * (T::lit(16.0) * n_t).ln().ln(),
        k => {
            let k_t = T::of(k);
            tau * k_t * (T::one().exp() * n_t / k_t).ln()
        }
    })
}

/// Minimizes `SSE(k) + segment_pen(k)` over `k` in `1..=k_max`.
pub fn segment_select_k<T: Scalar>(x: &Series<T>, tau: T, k_max: usize) -> Result<FitResult<T>> {
    let path = segment_fit_all_k(x, k_max)?;
    let n = x.len();
    let mut best: Option<(usize, T, T)> = None;
    for k in 1..=k_max {
        let p = segment_pen(k, n, tau)?;
        let obj = path.sse(k)? + p;
        if best.is_none_or(|(_, b, _)| obj < b) {
            best = Some((k, obj, p));
        }
    }
    let (k_hat, objective, p) = best.expect("k_max >= 1");
    let mut r = path.fit(x, k_hat)?;
    r.method = Method::SegmentAdaptive;
    r.penalty = Some(p);
    r.k_selected = Some(k_hat);
    r.objective = Some(objective);
    Ok(r)
}
