//! Comparison methods: plain gradient descent, heuristic restarted AGD with
//! a function-value restart, and Polak-Ribiere-plus nonlinear conjugate
//! gradient with a doubling backtracking line search.

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{CountedProblem, Problem};
use crate::trace::{RunOptions, RunResult, TraceRecord};
use crate::{int, lit, Scalar};

/// Backtracking line-search settings for the conjugate-gradient baseline.
/// Each iteration first doubles the previous accepted step, then halves at
/// most `max_halvings` times; if the sufficient-decrease test never holds the
/// last (smallest) tried step is accepted anyway.
#[derive(Debug, Clone, Copy)]
pub struct LineSearchConfig<F> {
    pub eta_init: F,
    pub max_halvings: u32,
    pub doubling: bool,
}

impl<F: Scalar> LineSearchConfig<F> {
    pub fn new(eta_init: F) -> Self {
        Self {
            eta_init,
            max_halvings: 10,
            doubling: true,
        }
    }
}

fn check_dim<F: Scalar>(problem: &dyn Problem<F>, x_init: &[F]) -> Result<()> {
    if x_init.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: x_init.len(),
        });
    }
    Ok(())
}

fn finish<F: Scalar>(
    cp: &mut CountedProblem<'_, F>,
    x: Vec<F>,
    trace: Vec<TraceRecord<F>>,
    restart_iters: Vec<usize>,
) -> RunResult<F> {
    let grad = cp.replay_gradient(&x);
    RunResult {
        output_grad_norm: linalg::norm(&grad),
        output: x,
        counters: cp.counter(),
        epochs_completed: 0,
        restart_iters,
        trace,
        terminated: true,
        epochs: Vec::new(),
        perturbations: Vec::new(),
    }
}

/// Fixed-iteration gradient descent `x <- x - eta grad f(x)`.
pub fn run_gd<F: Scalar>(
    problem: &dyn Problem<F>,
    eta: F,
    x_init: &[F],
    iters: usize,
    opts: RunOptions,
) -> Result<RunResult<F>> {
    check_dim(problem, x_init)?;
    if eta < F::zero() {
        return Err(Error::InvalidParameter(format!(
            "step size must be nonnegative, got {eta}"
        )));
    }
    let mut cp = CountedProblem::new(problem);
    let mut x = x_init.to_vec();
    let mut trace = Vec::with_capacity(iters);
    for iter in 1..=iters {
        let grad = cp.gradient(&x);
        let next: Vec<F> = x.iter().zip(&grad).map(|(&xi, &gi)| xi - eta * gi).collect();
        if !linalg::all_finite(&next) {
            return Err(Error::NonFinite("gradient descent step"));
        }
        x = next;
        let counter = cp.counter();
        trace.push(TraceRecord {
            global_iter: iter,
            epoch_index: 0,
            f_value: cp.problem().value(&x),
            grad_norm: linalg::norm(&grad),
            grad_evals: counter.grad_evals,
            fn_evals: counter.fn_evals,
            replay_grad_evals: counter.replay_grad_evals,
            restarted: false,
            iterate: opts.record_iterates.then(|| x.clone()),
        });
    }
    Ok(finish(&mut cp, x, trace, Vec::new()))
}

/// Heuristic restarted AGD: accelerated steps whose momentum coefficient
/// `(m-1)/(m+2)` grows while the objective keeps decreasing and resets to
/// zero the moment it increases. One gradient and one function evaluation
/// per iteration (plus the initial function value).
pub fn run_heuristic_ragd<F: Scalar>(
    problem: &dyn Problem<F>,
    eta: F,
    x_init: &[F],
    iters: usize,
    opts: RunOptions,
) -> Result<RunResult<F>> {
    check_dim(problem, x_init)?;
    let mut cp = CountedProblem::new(problem);
    let mut x = x_init.to_vec();
    let mut y = x_init.to_vec();
    let mut f_prev = cp.value(&x);
    let mut m = 1u64;
    let mut trace = Vec::with_capacity(iters);
    let mut restart_iters = Vec::new();
    for iter in 1..=iters {
        let grad = cp.gradient(&y);
        let x_next: Vec<F> = y.iter().zip(&grad).map(|(&yi, &gi)| yi - eta * gi).collect();
        if !linalg::all_finite(&x_next) {
            return Err(Error::NonFinite("heuristic accelerated step"));
        }
        let f_next = cp.value(&x_next);
        let reset = !(f_next <= f_prev);
        m = if reset { 1 } else { m + 1 };
        if reset {
            restart_iters.push(iter);
        }
        let coeff = (int::<F>((m - 1) as usize)) / (int::<F>((m + 2) as usize));
        y = x_next
            .iter()
            .zip(&x)
            .map(|(&xn, &xo)| xn + coeff * (xn - xo))
            .collect();
        x = x_next;
        f_prev = f_next;
        let counter = cp.counter();
        trace.push(TraceRecord {
            global_iter: iter,
            epoch_index: 0,
            f_value: f_next,
            grad_norm: linalg::norm(&grad),
            grad_evals: counter.grad_evals,
            fn_evals: counter.fn_evals,
            replay_grad_evals: counter.replay_grad_evals,
            restarted: reset,
            iterate: opts.record_iterates.then(|| x.clone()),
        });
    }
    Ok(finish(&mut cp, x, trace, restart_iters))
}

/// Polak-Ribiere-plus coefficient
/// `max(<g, g - g_prev> / ||g_prev||^2, 0)`, with a zero previous gradient
/// treated as a steepest-descent restart.
pub fn pr_plus_beta<F: Scalar>(grad: &[F], grad_prev: &[F]) -> F {
    let denom = linalg::norm_sq(grad_prev);
    if denom == F::zero() {
        return F::zero();
    }
    let mut numer = F::zero();
    for (g, gp) in grad.iter().zip(grad_prev) {
        numer = numer + *g * (*g - *gp);
    }
    (numer / denom).max(F::zero())
}

/// Nonlinear conjugate gradient with the doubling backtracking line search:
/// try `2 eta_prev`, halve until
/// `f(x + eta d) <= f(x) + eta <d, grad f(x)> / 2` holds or the halving cap
/// is reached. Function evaluations are charged per sufficient-decrease test.
pub fn run_nlcg<F: Scalar>(
    problem: &dyn Problem<F>,
    ls: LineSearchConfig<F>,
    x_init: &[F],
    iters: usize,
    opts: RunOptions,
) -> Result<RunResult<F>> {
    check_dim(problem, x_init)?;
    if !(ls.eta_init > F::zero()) {
        return Err(Error::InvalidParameter(format!(
            "initial step size must be positive, got {}",
            ls.eta_init
        )));
    }
    if ls.max_halvings == 0 {
        return Err(Error::InvalidParameter("max_halvings must be at least 1".into()));
    }
    let dim = problem.dim();
    let mut cp = CountedProblem::new(problem);
    let mut x = x_init.to_vec();
    let mut f_curr = cp.value(&x);
    let mut grad_prev: Vec<F> = Vec::new();
    let mut direction = vec![F::zero(); dim];
    let mut eta_prev = ls.eta_init;
    let mut trace = Vec::with_capacity(iters);

    for iter in 1..=iters {
        let grad = cp.gradient(&x);
        let beta = if grad_prev.is_empty() {
            F::zero()
        } else {
            pr_plus_beta(&grad, &grad_prev)
        };
        for i in 0..dim {
            direction[i] = -grad[i] + beta * direction[i];
        }
        let slope = linalg::dot(&direction, &grad);

        let mut eta = if ls.doubling {
            eta_prev + eta_prev
        } else {
            eta_prev
        };
        let mut halvings = 0u32;
        let (x_next, f_next) = loop {
            let trial: Vec<F> = x
                .iter()
                .zip(&direction)
                .map(|(&xi, &di)| xi + eta * di)
                .collect();
            let f_trial = cp.value(&trial);
            if f_trial <= f_curr + eta * slope / lit::<F>(2.0) || halvings >= ls.max_halvings {
                break (trial, f_trial);
            }
            eta = eta / lit::<F>(2.0);
            halvings += 1;
        };
        if !linalg::all_finite(&x_next) {
            return Err(Error::NonFinite("conjugate gradient step"));
        }
        x = x_next;
        f_curr = f_next;
        eta_prev = eta;
        grad_prev = grad.clone();

        let counter = cp.counter();
        trace.push(TraceRecord {
            global_iter: iter,
            epoch_index: 0,
            f_value: f_next,
            grad_norm: linalg::norm(&grad),
            grad_evals: counter.grad_evals,
            fn_evals: counter.fn_evals,
            replay_grad_evals: counter.replay_grad_evals,
            restarted: false,
            iterate: opts.record_iterates.then(|| x.clone()),
        });
    }
    Ok(finish(&mut cp, x, trace, Vec::new()))
}
