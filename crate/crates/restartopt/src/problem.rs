//! Objective interface and evaluation accounting.

use crate::Scalar;

/// A smooth objective with value and gradient oracles.
///
/// Implementations must be pure: the same point always yields the same value
/// and gradient, with no hidden state mutation. The solvers treat problems as
/// shareable read-only evaluators; all counting happens in [`CountedProblem`].
pub trait Problem<F: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[F]) -> F;

    /// Gradient at `x`; the returned vector has length `dim()`.
    fn gradient(&self, x: &[F]) -> Vec<F>;

    /// Lipschitz constant of the gradient, when known.
    fn lipschitz_gradient(&self) -> Option<F> {
        None
    }

    /// Lipschitz constant of the Hessian, when known.
    fn lipschitz_hessian(&self) -> Option<F> {
        None
    }

    /// A known lower bound on the objective, when available. Used by audit
    /// tooling to form the initial optimality gap.
    fn lower_bound(&self) -> Option<F> {
        None
    }
}

/// Evaluation counts accumulated over one run.
///
/// Every gradient call goes through [`CountedProblem`] and lands in either
/// `grad_evals` (the solver's main loop) or `replay_grad_evals` (the
/// deterministic replay that reconstructs the averaged output); every value
/// call lands in `fn_evals`. Counters never decrease.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounter {
    pub grad_evals: u64,
    pub fn_evals: u64,
    pub replay_grad_evals: u64,
}

/// A problem reference paired with the counter for one run.
///
/// Runs never share counters; monitors that need extra evaluations use their
/// own `CountedProblem` so audits stay invisible to the run under audit.
pub struct CountedProblem<'a, F: Scalar> {
    problem: &'a dyn Problem<F>,
    counter: EvalCounter,
}

impl<'a, F: Scalar> CountedProblem<'a, F> {
    pub fn new(problem: &'a dyn Problem<F>) -> Self {
        Self {
            problem,
            counter: EvalCounter::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn problem(&self) -> &'a dyn Problem<F> {
        self.problem
    }

    pub fn value(&mut self, x: &[F]) -> F {
        self.counter.fn_evals += 1;
        self.problem.value(x)
    }

    pub fn gradient(&mut self, x: &[F]) -> Vec<F> {
        self.counter.grad_evals += 1;
        self.problem.gradient(x)
    }

    /// Gradient evaluation charged to the replay counter instead of the main
    /// one, keeping the main count comparable to the stated complexity
    /// bounds.
    pub fn replay_gradient(&mut self, x: &[F]) -> Vec<F> {
        self.counter.replay_grad_evals += 1;
        self.problem.gradient(x)
    }

    pub fn counter(&self) -> EvalCounter {
        self.counter
    }
}
