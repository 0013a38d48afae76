//! Weighted isotonic regression by pool-adjacent-violators.

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Scalar};
use crate::stepfn::{FitResult, Method, Monotone, Series, StepFunction};

#[derive(Debug, Clone, Copy)]
struct Block<T> {
    weight: CompensatedSum<T>,
    total: CompensatedSum<T>,
    /// Set when the block was pooled from blocks of identical level, which
    /// keeps that level exact instead of recomputing it from the sums.
    tied: Option<T>,
    end: usize,
}

impl<T: Scalar> Block<T> {
    #[inline]
    fn mean(&self) -> T {
        self.tied.unwrap_or_else(|| self.total.value() / self.weight.value())
    }
}

/// Least-squares nondecreasing fit of `x` under its weights.
///
/// Blocks whose means tie are pooled, so the returned levels are strictly
/// increasing and the knots are exactly the change points of the solution.
pub fn isotonic_fit<T: Scalar>(x: &Series<T>) -> Result<FitResult<T>> {
    let mut stack: Vec<Block<T>> = Vec::with_capacity(x.len().min(1024));
    for (i, &v) in x.values().iter().enumerate() {
        let w = x.weight(i);
        let mut weight = CompensatedSum::new();
        weight.add(w);
        let mut total = CompensatedSum::new();
        total.add(w * v);
        stack.push(Block {
            weight,
            total,
            tied: None,
            end: i + 1,
        });
        while stack.len() >= 2 {
            let top = stack.len();
            let last = stack[top - 1];
            let prev = &mut stack[top - 2];
            let (a, b) = (prev.mean(), last.mean());
            if a < b {
                break;
            }
            prev.tied = (a == b).then_some(a);
            prev.weight.merge(&last.weight);
            prev.total.merge(&last.total);
            prev.end = last.end;
            stack.pop();
        }
    }
    let knots = stack.iter().map(|b| b.end).collect();
    let levels = stack.iter().map(Block::mean).collect();
    let fit = StepFunction::new(x.len(), knots, levels, Monotone::Nondecreasing)?;
    FitResult::new(fit, x, Method::Isotonic)
}

/// Least-squares nonincreasing fit: the mirror image of [`isotonic_fit`].
pub fn antitonic_fit<T: Scalar>(x: &Series<T>) -> Result<FitResult<T>> {
    let up = isotonic_fit(&x.negated())?;
    let fit = up.fit.negated();
    FitResult::new(fit, x, Method::Antitonic)
}

/// Isotonic regression value at the 1-based index `i` from the min-max formula
/// `min_{v >= i} max_{u <= i} mean(x[u..=v])`.
///
/// Quadratic per index; intended as an independent check on [`isotonic_fit`].
pub fn minmax_reference<T: Scalar>(x: &Series<T>, i: usize) -> Result<T> {
    let n = x.len();
    if i == 0 || i > n {
        return Err(Error::Range { index: i, n });
    }
    let vals = x.values();
    // Running sums over [i..=v] as v grows, then extended leftwards over u.
    let mut tail_num = T::zero();
    let mut tail_den = T::zero();
    let mut best = T::infinity();
    for v in i..=n {
        let w = x.weight(v - 1);
        tail_num += w * vals[v - 1];
        tail_den += w;
        let mut num = tail_num;
        let mut den = tail_den;
        let mut inner = num / den;
        for u in (1..i).rev() {
            let w = x.weight(u - 1);
            num += w * vals[u - 1];
            den += w;
            inner = inner.max(num / den);
        }
        best = best.min(inner);
    }
    Ok(best)
}
