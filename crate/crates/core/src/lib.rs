//! Least-squares fitting of nondecreasing step signals with a bounded number of
//! pieces ("reduced isotonic regression"), together with the estimators it is
//! usually compared against.
//!
//! * [`pava`]: weighted isotonic and antitonic regression.
//! * [`reduced_iso`]: exact k-piece monotone fits for every k, via dynamic
//!   programming over the PAVA knots.
//! * [`model_select`]: iterated-logarithm penalties and data-driven choice of k.
//! * [`segment_dp`]: unconstrained piecewise-constant least squares.
//! * [`unimodal`]: mode enumeration and exponential-weight aggregation.
//! * [`signals`], [`bench`]: benchmark signals, noise laws and the Monte Carlo
//!   risk harness.
//!
//! The numerical core is generic over [`Scalar`] (`f32`/`f64`); the `*64`
//! aliases below name the usual double-precision instantiations.

pub mod bench;
pub mod error;
pub mod model_select;
pub mod pava;
pub mod reduced_iso;
pub mod scalar;
pub mod segment_dp;
pub mod signals;
pub mod stepfn;
pub mod unimodal;

pub use error::{Error, Result};
pub use model_select::{PenaltyFamily, PenaltySpec, SigmaSpec};
pub use reduced_iso::ReducedPath;
pub use scalar::Scalar;
pub use stepfn::{FitResult, Method, Monotone, Series, StepFunction};

pub type Series64 = Series<f64>;
pub type Series32 = Series<f32>;
pub type StepFunction64 = StepFunction<f64>;
pub type StepFunction32 = StepFunction<f32>;
pub type FitResult64 = FitResult<f64>;
pub type FitResult32 = FitResult<f32>;
pub type ReducedPath64 = ReducedPath<f64>;
pub type ReducedPath32 = ReducedPath<f32>;
pub type PenaltySpec64 = PenaltySpec<f64>;
