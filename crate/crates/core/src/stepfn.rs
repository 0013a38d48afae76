//! Observation series and piecewise-constant fits.
//!
//! Knots are 1-based right endpoints: a fit with knots `a_1 < ... < a_m = n`
//! takes the value `levels[j]` on the half-open-left block `(a_{j-1}, a_j]`,
//! with `a_0 = 0`.

use std::fmt;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Scalar};

/// Observation vector with optional positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<T> {
    values: Vec<T>,
    weights: Option<Vec<T>>,
}

impl<T: Scalar> Series<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Dimension("series must contain at least one value".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("value at index {} is not finite", i + 1)));
        }
        Ok(Self {
            values,
            weights: None,
        })
    }

    pub fn with_weights(values: Vec<T>, weights: Vec<T>) -> Result<Self> {
        let mut s = Self::new(values)?;
        if weights.len() != s.values.len() {
            return Err(Error::Dimension(format!(
                "{} weights for {} values",
                weights.len(),
                s.values.len()
            )));
        }
        if let Some(i) = weights
            .iter()
            .position(|w| !w.is_finite() || *w <= T::zero())
        {
            return Err(Error::Argument(format!(
                "weight at index {} must be positive and finite",
                i + 1
            )));
        }
        s.weights = Some(weights);
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: a series holds at least one value.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn weights(&self) -> Option<&[T]> {
        self.weights.as_deref()
    }

    /// Weight of the 0-based position `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> T {
        self.weights.as_ref().map_or(T::one(), |w| w[i])
    }

    pub fn has_unit_weights(&self) -> bool {
        self.weights
            .as_ref()
            .is_none_or(|w| w.iter().all(|&v| v == T::one()))
    }

    /// Weighted mean over the 0-based half-open range.
    pub fn block_mean(&self, range: Range<usize>) -> T {
        let mut num = CompensatedSum::new();
        let mut den = CompensatedSum::new();
        for i in range {
            let w = self.weight(i);
            num.add(w * self.values[i]);
            den.add(w);
        }
        num.value() / den.value()
    }

    pub fn mean(&self) -> T {
        self.block_mean(0..self.len())
    }

    /// Sub-series over a 0-based half-open range (must be nonempty).
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::Dimension(format!(
                "slice {}..{} of a series of length {}",
                range.start,
                range.end,
                self.len()
            )));
        }
        Ok(Self {
            values: self.values[range.clone()].to_vec(),
            weights: self.weights.as_ref().map(|w| w[range].to_vec()),
        })
    }

    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|&v| -v).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Shape constraint carried by a [`StepFunction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotone {
    Nondecreasing,
    Nonincreasing,
    Unconstrained,
}

impl Monotone {
    fn flipped(self) -> Self {
        match self {
            Monotone::Nondecreasing => Monotone::Nonincreasing,
            Monotone::Nonincreasing => Monotone::Nondecreasing,
            Monotone::Unconstrained => Monotone::Unconstrained,
        }
    }
}

/// Piecewise-constant vector of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction<T> {
    n: usize,
    knots: Vec<usize>,
    levels: Vec<T>,
    monotone: Monotone,
}

impl<T: Scalar> StepFunction<T> {
    /// Builds a step function, validating the knot structure.
    ///
    /// With a monotone flag, adjacent equal levels are merged and the remaining
    /// levels must be strictly ordered in the flagged direction.
    pub fn new(n: usize, knots: Vec<usize>, levels: Vec<T>, monotone: Monotone) -> Result<Self> {
        check_breakpoints(n, &knots)?;
        if knots.len() != levels.len() {
            return Err(Error::Structure(format!(
                "{} knots but {} levels",
                knots.len(),
                levels.len()
            )));
        }
        if levels.iter().any(|l| !l.is_finite()) {
            return Err(Error::Structure("levels must be finite".into()));
        }
        let (knots, levels) = match monotone {
            Monotone::Unconstrained => (knots, levels),
            _ => merge_equal_levels(knots, levels),
        };
        let ordered = |a: T, b: T| match monotone {
            Monotone::Nondecreasing => a < b,
            Monotone::Nonincreasing => a > b,
            Monotone::Unconstrained => true,
        };
        if let Some(j) = levels.windows(2).position(|w| !ordered(w[0], w[1])) {
            return Err(Error::Structure(format!(
                "levels {} and {} violate the {:?} constraint",
                levels[j],
                levels[j + 1],
                monotone
            )));
        }
        Ok(Self {
            n,
            knots,
            levels,
            monotone,
        })
    }

    pub fn constant(n: usize, level: T) -> Result<Self> {
        Self::new(n, vec![n], vec![level], Monotone::Unconstrained)
    }

    /// Run-length encodes a dense vector.
    pub fn from_dense(values: &[T], monotone: Monotone) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Dimension("empty vector".into()));
        }
        let mut knots = Vec::new();
        let mut levels = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            if levels.last() == Some(&v) {
                *knots.last_mut().unwrap() = i + 1;
            } else {
                knots.push(i + 1);
                levels.push(v);
            }
        }
        Self::new(values.len(), knots, levels, monotone)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn knots(&self) -> &[usize] {
        &self.knots
    }

    pub fn levels(&self) -> &[T] {
        &self.levels
    }

    pub fn monotone(&self) -> Monotone {
        self.monotone
    }

    pub fn pieces(&self) -> usize {
        self.knots.len()
    }

    /// Value at the 1-based index `i`.
    pub fn evaluate(&self, i: usize) -> Result<T> {
        if i == 0 || i > self.n {
            return Err(Error::Range { index: i, n: self.n });
        }
        let j = self.knots.partition_point(|&a| a < i);
        Ok(self.levels[j])
    }

    /// Iterates `(start, end, level)` with 0-based half-open ranges.
    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let starts = std::iter::once(0).chain(self.knots.iter().copied());
        starts
            .zip(self.knots.iter().copied())
            .zip(self.levels.iter().copied())
            .map(|((s, e), l)| (s, e, l))
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n);
        for (s, e, l) in self.blocks() {
            out.extend(std::iter::repeat_n(l, e - s));
        }
        out
    }

    /// Weighted residual sum of squares against `x`.
    pub fn sse(&self, x: &Series<T>) -> Result<T> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!(
                "fit has length {} but series has length {}",
                self.n,
                x.len()
            )));
        }
        let mut acc = CompensatedSum::new();
        for (s, e, l) in self.blocks() {
            for i in s..e {
                let r = x.values()[i] - l;
                acc.add(x.weight(i) * r * r);
            }
        }
        Ok(acc.value())
    }

    pub fn negated(&self) -> Self {
        Self {
            n: self.n,
            knots: self.knots.clone(),
            levels: self.levels.iter().map(|&l| -l).collect(),
            monotone: self.monotone.flipped(),
        }
    }
}

fn merge_equal_levels<T: PartialEq + Copy>(knots: Vec<usize>, levels: Vec<T>) -> (Vec<usize>, Vec<T>) {
    let mut k_out: Vec<usize> = Vec::with_capacity(knots.len());
    let mut l_out: Vec<T> = Vec::with_capacity(levels.len());
    for (a, l) in knots.into_iter().zip(levels) {
        if l_out.last() == Some(&l) {
            *k_out.last_mut().unwrap() = a;
        } else {
            k_out.push(a);
            l_out.push(l);
        }
    }
    (k_out, l_out)
}

pub(crate) fn check_breakpoints(n: usize, knots: &[usize]) -> Result<()> {
    if n == 0 {
        return Err(Error::Structure("length must be positive".into()));
    }
    match knots.last() {
        None => return Err(Error::Structure("no knots".into())),
        Some(&last) if last != n => {
            return Err(Error::Structure(format!("last knot {last} must equal n = {n}")))
        }
        _ => {}
    }
    if knots[0] == 0 || knots.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Structure(format!(
            "knots must be strictly increasing positive integers: {knots:?}"
        )));
    }
    Ok(())
}

/// Step function whose level on each block is the weighted block mean of `x`.
///
/// Equal adjacent means are kept as separate blocks.
pub fn project_to_blocks<T: Scalar>(x: &Series<T>, breakpoints: &[usize]) -> Result<StepFunction<T>> {
    check_breakpoints(x.len(), breakpoints)?;
    let mut start = 0;
    let levels = breakpoints
        .iter()
        .map(|&end| {
            let m = x.block_mean(start..end);
            start = end;
            m
        })
        .collect();
    StepFunction::new(x.len(), breakpoints.to_vec(), levels, Monotone::Unconstrained)
}

/// Which estimator produced a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Isotonic,
    Antitonic,
    Reduced,
    ReducedAntitonic,
    BruteForce,
    Adaptive,
    AdaptiveModified,
    Segment,
    SegmentAdaptive,
    UnimodalMode,
    UnimodalAggregate,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Isotonic => "iso",
            Method::Antitonic => "antitonic",
            Method::Reduced => "reduced",
            Method::ReducedAntitonic => "reduced-antitonic",
            Method::BruteForce => "brute-force",
            Method::Adaptive => "auto",
            Method::AdaptiveModified => "auto-modified",
            Method::Segment => "segment",
            Method::SegmentAdaptive => "auto-segment",
            Method::UnimodalMode => "unimodal-mode",
            Method::UnimodalAggregate => "unimodal",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A fitted step function with its residual and selection metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub fit: StepFunction<T>,
    /// Weighted residual sum of squares against the fitted series.
    pub sse: T,
    /// Number of pieces in `fit`.
    pub k_used: usize,
    pub penalty: Option<T>,
    pub method: Method,
    /// Piece budget chosen by an adaptive rule.
    pub k_selected: Option<usize>,
    /// Penalized objective at `k_selected`.
    pub objective: Option<T>,
}

impl<T: Scalar> FitResult<T> {
    /// Wraps a fit, computing its residual against `x`.
    pub fn new(fit: StepFunction<T>, x: &Series<T>, method: Method) -> Result<Self> {
        let sse = fit.sse(x)?;
        Ok(Self {
            k_used: fit.pieces(),
            fit,
            sse,
            penalty: None,
            method,
            k_selected: None,
            objective: None,
        })
    }

    pub fn fitted(&self) -> Vec<T> {
        self.fit.to_dense()
    }
}
