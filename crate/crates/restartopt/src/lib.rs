//! Restarted accelerated first-order methods for smooth nonconvex minimization.
//!
//! The crate implements two momentum methods that keep the large step size
//! `eta = 1/(4L)` while guaranteeing per-epoch descent through a displacement
//! restart rule, together with adaptive variants that work when the Lipschitz
//! constants are unknown, a perturbed variant that escapes strict saddle
//! points, and the classical baselines they are compared against (gradient
//! descent, heuristic restarted AGD, nonlinear conjugate gradient).
//!
//! All core math is generic over the scalar type through [`Scalar`]
//! (`f32`/`f64` via `num-traits`); concrete `f64` aliases live at the crate
//! root. Every run reports exact evaluation counts and a per-iteration trace,
//! and the [`verify`] module provides independent oracles (finite differences,
//! restart bookkeeping, per-epoch descent, trajectory equivalence) that audit
//! runs without touching their counters.

// Negated float comparisons like `!(x > bound)` are load-bearing here:
// unlike `x <= bound`, they treat NaN as out of bounds.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;

pub mod baselines;
pub mod error;
pub mod linalg;
pub mod params;
pub mod problem;
pub mod problems;
pub mod ragd;
pub mod rhb;
pub mod trace;
pub mod verify;

/// Scalar type the solvers are generic over.
///
/// Blanket-implemented for any float type providing the `num-traits`
/// operations; in practice `f32` and `f64`.
pub trait Scalar: num_traits::Float + fmt::Debug + fmt::Display + Send + Sync + 'static {}

impl<T> Scalar for T where T: num_traits::Float + fmt::Debug + fmt::Display + Send + Sync + 'static {}

pub use error::{Error, Result};
pub use params::{AdaptiveParams, C0Schedule, Mode, PerturbParams, RagdParams, RhbParams};
pub use problem::{CountedProblem, EvalCounter, Problem};
pub use trace::{EpochState, EpochTranscript, PerturbationEvent, RunOptions, RunResult, TraceRecord};

/// Convert a small nonnegative integer to the scalar type.
pub(crate) fn int<F: Scalar>(n: usize) -> F {
    F::from(n).expect("integer representable in scalar type")
}

/// Convert an `f64` constant to the scalar type.
pub(crate) fn lit<F: Scalar>(x: f64) -> F {
    F::from(x).expect("constant representable in scalar type")
}

// Concrete instantiations used by the CLI harness and most tests.
pub type RagdParams64 = params::RagdParams<f64>;
pub type RhbParams64 = params::RhbParams<f64>;
pub type AdaptiveParams64 = params::AdaptiveParams<f64>;
pub type PerturbParams64 = params::PerturbParams<f64>;
pub type RunResult64 = trace::RunResult<f64>;
pub type ObservedMatrix64 = problems::ObservedMatrix<f64>;
pub type FactorPair64 = problems::FactorPair<f64>;
