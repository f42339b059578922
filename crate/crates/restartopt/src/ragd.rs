//! Restarted accelerated gradient descent.
//!
//! One epoch runs the classical two-sequence accelerated iteration
//!
//! ```text
//! y^k = x^k + (1 - theta)(x^k - x^{k-1}),    x^{k+1} = y^k - eta grad f(y^k)
//! ```
//!
//! until the displacement condition `k * sum_{t<k} ||x^{t+1} - x^t||^2 > B^2`
//! fires, which resets the momentum by re-anchoring at the current iterate.
//! The run terminates when an epoch survives `K` iterations, and outputs the
//! suffix average `y_hat = (1/(K0+1)) sum_{k<=K0} y^k`, where `K0` minimizes
//! the displacement over the second half of the final epoch.
//!
//! The adaptive variant relaxes the trigger radius and shrinks it
//! geometrically, rolling an epoch back when it fails a descent test; the
//! perturbed variant adds a small uniform-ball kick at restarts whose last
//! gradient was small, which lets it escape strict saddle points.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StandardUniform};

use crate::error::{Error, Result};
use crate::linalg;
use crate::params::{AdaMode, AdaptiveParams, PerturbParams, RagdParams};
use crate::problem::{CountedProblem, Problem};
use crate::trace::{EpochState, EpochTranscript, PerturbationEvent, RunOptions, RunResult, TraceRecord};
use crate::{int, Scalar};

/// Extrapolated point `x + (1 - theta)(x - x_prev)`.
pub(crate) fn extrapolate<F: Scalar>(x: &[F], x_prev: &[F], theta: F) -> Vec<F> {
    let momentum = F::one() - theta;
    x.iter()
        .zip(x_prev)
        .map(|(&a, &b)| a + momentum * (a - b))
        .collect()
}

fn agd_step_inner<F: Scalar>(
    state: &mut EpochState<F>,
    problem: &mut CountedProblem<'_, F>,
    eta: F,
    theta: F,
    replay: bool,
) -> Result<()> {
    let y = extrapolate(&state.x_curr, &state.x_prev, theta);
    let grad = if replay {
        problem.replay_gradient(&y)
    } else {
        problem.gradient(&y)
    };
    let x_next: Vec<F> = y.iter().zip(&grad).map(|(&yi, &gi)| yi - eta * gi).collect();
    if !linalg::all_finite(&x_next) {
        return Err(Error::NonFinite("accelerated gradient step"));
    }
    state.advance(x_next, linalg::norm(&grad));
    Ok(())
}

/// One accelerated step; charges one gradient evaluation and updates the
/// displacement bookkeeping. The extrapolated point is transient.
pub fn agd_step<F: Scalar>(
    state: &mut EpochState<F>,
    problem: &mut CountedProblem<'_, F>,
    eta: F,
    theta: F,
) -> Result<()> {
    agd_step_inner(state, problem, eta, theta, false)
}

/// The restart predicate `k * disp_sum > B^2`, compared exactly.
pub fn check_restart<F: Scalar>(state: &EpochState<F>, big_b: F) -> bool {
    int::<F>(state.k) * state.disp_sum > big_b * big_b
}

/// Smallest index attaining the displacement minimum over the window
/// `floor(K/2) <= k <= K-1`.
pub fn select_k0<F: Scalar>(disp_norms: &[F], big_k: usize) -> usize {
    debug_assert!(disp_norms.len() >= big_k && big_k >= 1);
    let lo = big_k / 2;
    let mut best = lo;
    for k in lo + 1..big_k {
        if disp_norms[k] < disp_norms[best] {
            best = k;
        }
    }
    best
}

/// Deterministically replay the final epoch from its anchor and average the
/// extrapolated points `y^0 ..= y^K0`. The replay re-runs the recorded
/// trajectory bit-identically, so only the scalar displacement log has to be
/// kept during the run; its gradient calls are charged to the replay counter.
pub fn replay_average_y<F: Scalar>(
    problem: &mut CountedProblem<'_, F>,
    anchor: &[F],
    k0: usize,
    eta: F,
    theta: F,
) -> Result<Vec<F>> {
    let mut state = EpochState::start(anchor.to_vec());
    let mut acc = vec![F::zero(); anchor.len()];
    for k in 0..=k0 {
        let y = extrapolate(&state.x_curr, &state.x_prev, theta);
        for (a, yi) in acc.iter_mut().zip(&y) {
            *a = *a + *yi;
        }
        if k < k0 {
            agd_step_inner(&mut state, problem, eta, theta, true)?;
        }
    }
    let count = int::<F>(k0 + 1);
    Ok(acc.into_iter().map(|a| a / count).collect())
}

/// Select `K0` over the final epoch's displacement log and rebuild the
/// averaged output by replay.
pub fn select_k0_and_average<F: Scalar>(
    problem: &mut CountedProblem<'_, F>,
    anchor: &[F],
    disp_norms: &[F],
    big_k: usize,
    eta: F,
    theta: F,
) -> Result<(usize, Vec<F>)> {
    let k0 = select_k0(disp_norms, big_k);
    let y_hat = replay_average_y(problem, anchor, k0, eta, theta)?;
    Ok((k0, y_hat))
}

/// Draw a point uniformly from the ball of radius `radius` centered at the
/// origin: an isotropic Gaussian direction scaled by `radius * u^(1/d)`.
pub fn sample_uniform_ball<F, R>(rng: &mut R, dim: usize, radius: F) -> Vec<F>
where
    F: Scalar,
    R: Rng,
    StandardNormal: Distribution<F>,
    StandardUniform: Distribution<F>,
{
    let direction: Vec<F> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let norm = linalg::norm(&direction);
    let u: F = rng.sample(StandardUniform);
    if norm == F::zero() || radius == F::zero() {
        return vec![F::zero(); dim];
    }
    let scale = radius * u.powf(F::one() / int::<F>(dim)) / norm;
    direction.into_iter().map(|g| g * scale).collect()
}

/// Restart hook: maps the displacement-triggered restart point to the next
/// anchor, optionally emitting a perturbation event.
type RestartHook<'h, F> =
    &'h mut dyn FnMut(&[F], F, usize) -> (Vec<F>, Option<PerturbationEvent<F>>);

fn transcript_from_state<F: Scalar>(
    state: &EpochState<F>,
    ended_by_restart: bool,
    threshold_sq: F,
    restart_point: Option<Vec<F>>,
) -> EpochTranscript<F> {
    EpochTranscript {
        anchor: state.epoch_anchor.clone(),
        steps_taken: state.k,
        disp_norms: state.disp_norms.clone(),
        anchor_dists: state.anchor_dists.clone(),
        ended_by_restart,
        restart_trigger_k: ended_by_restart.then_some(state.k),
        threshold_sq,
        timeout_trigger: false,
        accepted: None,
        restart_point,
    }
}

fn run_ragd_impl<F: Scalar>(
    problem: &dyn Problem<F>,
    params: &RagdParams<F>,
    x_init: &[F],
    opts: RunOptions,
    mut hook: Option<RestartHook<'_, F>>,
) -> Result<RunResult<F>> {
    if x_init.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: x_init.len(),
        });
    }
    let mut cp = CountedProblem::new(problem);
    let mut state = EpochState::start(x_init.to_vec());
    let b_sq = params.big_b * params.big_b;

    let mut trace = Vec::new();
    let mut epochs = Vec::new();
    let mut restart_iters = Vec::new();
    let mut perturbations = Vec::new();
    let mut global_iter = 0usize;
    let mut terminated = true;

    loop {
        if state.k >= params.big_k {
            break;
        }
        if global_iter as u64 >= opts.budget {
            terminated = false;
            break;
        }
        agd_step(&mut state, &mut cp, params.eta, params.theta)?;
        global_iter += 1;
        let fired = check_restart(&state, params.big_b);
        let counter = cp.counter();
        trace.push(TraceRecord {
            global_iter,
            epoch_index: epochs.len(),
            f_value: cp.problem().value(&state.x_curr),
            grad_norm: state.last_grad_norm.unwrap(),
            grad_evals: counter.grad_evals,
            fn_evals: counter.fn_evals,
            replay_grad_evals: counter.replay_grad_evals,
            restarted: fired,
            iterate: opts.record_iterates.then(|| state.x_curr.clone()),
        });
        if fired {
            restart_iters.push(state.k);
            let restart_point = state.x_curr.clone();
            let (anchor, event) = match hook.as_mut() {
                Some(hook) => {
                    let grad_norm = state.last_grad_norm.unwrap();
                    (hook)(&restart_point, grad_norm, global_iter)
                }
                None => (restart_point.clone(), None),
            };
            if let Some(event) = event {
                perturbations.push(event);
            }
            epochs.push(transcript_from_state(&state, true, b_sq, Some(restart_point)));
            state.restart(anchor);
        }
    }

    epochs.push(transcript_from_state(&state, false, b_sq, None));

    let (output, output_grad_norm) = if terminated {
        let (_k0, y_hat) = select_k0_and_average(
            &mut cp,
            &state.epoch_anchor,
            &state.disp_norms,
            params.big_k,
            params.eta,
            params.theta,
        )?;
        let grad = cp.replay_gradient(&y_hat);
        let norm = linalg::norm(&grad);
        (y_hat, norm)
    } else {
        let grad = cp.replay_gradient(&state.x_curr);
        (state.x_curr.clone(), linalg::norm(&grad))
    };

    Ok(RunResult {
        output,
        output_grad_norm,
        counters: cp.counter(),
        epochs_completed: epochs.len(),
        restart_iters,
        trace,
        terminated,
        epochs,
        perturbations,
    })
}

/// Run restarted AGD from `x_init` until an epoch survives `K` iterations,
/// or the iteration budget is exhausted (the result is still returned, with
/// `terminated` cleared and the current iterate as output).
pub fn run_ragd<F: Scalar>(
    problem: &dyn Problem<F>,
    params: &RagdParams<F>,
    x_init: &[F],
    opts: RunOptions,
) -> Result<RunResult<F>> {
    run_ragd_impl(problem, params, x_init, opts, None)
}

/// Perturbed variant: at every displacement restart a vector is drawn
/// uniformly from the radius-`r` ball and added to the new anchor whenever
/// the gradient at the last extrapolated point was at most `B/eta` (that
/// gradient is reused from the step, costing nothing extra). Deterministic
/// given the seed; `r = 0` reproduces [`run_ragd`] bit for bit.
pub fn run_perturbed_ragd<F>(
    problem: &dyn Problem<F>,
    params: &RagdParams<F>,
    perturb: &PerturbParams<F>,
    x_init: &[F],
    opts: RunOptions,
) -> Result<RunResult<F>>
where
    F: Scalar,
    StandardNormal: Distribution<F>,
    StandardUniform: Distribution<F>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(perturb.seed);
    let dim = problem.dim();
    let gate = params.big_b / params.eta;
    let radius = perturb.radius;
    let mut hook = move |restart_point: &[F], grad_norm: F, global_iter: usize| {
        let xi = sample_uniform_ball(&mut rng, dim, radius);
        let small_gradient = grad_norm <= gate;
        let applied = small_gradient && radius > F::zero();
        let anchor = if applied {
            restart_point.iter().zip(&xi).map(|(&x, &d)| x + d).collect()
        } else {
            restart_point.to_vec()
        };
        let event = PerturbationEvent {
            global_iter,
            trigger_grad_norm: grad_norm,
            xi_norm: linalg::norm(&xi),
            applied,
        };
        (anchor, Some(event))
    };
    run_ragd_impl(problem, params, x_init, opts, Some(&mut hook))
}

/// Adaptive restarted AGD.
///
/// The trigger is relaxed to `k * disp_sum > max(B^2, B0^2)` or `k > K`, with
/// `B0` divided by `c0` at every trigger. A triggered epoch is kept only if
/// it decreased the objective by `gamma * eps^{3/2} / sqrt(rho)`; otherwise
/// the whole epoch is discarded, the previous accepted iterate restored, and
/// `B0` divided by `c1` (in unknown-Lipschitz mode the step size is also
/// shrunk and the curvature estimate grown, re-deriving `B`, `theta`, `K`).
/// The loop exits once `k` reaches `K` with `B0 <= B`; the output is
/// whichever of the last iterate and the suffix average has the smaller
/// gradient norm (those two evaluations are charged to the main gradient
/// count, and the trigger tests charge one function evaluation each, plus
/// one at initialization).
pub fn run_ada_ragd<F: Scalar>(
    problem: &dyn Problem<F>,
    params: &RagdParams<F>,
    ada: &AdaptiveParams<F>,
    mode: AdaMode,
    x_init: &[F],
    opts: RunOptions,
) -> Result<RunResult<F>> {
    if x_init.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: x_init.len(),
        });
    }
    if mode == AdaMode::UnknownLipschitz && !(ada.c1 >= ada.c2 && ada.c2 > F::one()) {
        return Err(Error::InvalidParameter(
            "unknown-Lipschitz mode needs c1 >= c2 > 1".into(),
        ));
    }

    let mut p = *params;
    let mut cp = CountedProblem::new(problem);
    let mut state = EpochState::start(x_init.to_vec());
    let mut b0 = ada.b0_init;
    let mut x_accepted = x_init.to_vec();
    let mut f_accepted = cp.value(&x_accepted);

    let mut trace = Vec::new();
    let mut epochs: Vec<EpochTranscript<F>> = Vec::new();
    let mut restart_iters = Vec::new();
    let mut global_iter = 0usize;
    let mut triggers = 0u64;
    let mut terminated = true;

    loop {
        if state.k >= p.big_k && b0 <= p.big_b {
            break;
        }
        if global_iter as u64 >= opts.budget {
            terminated = false;
            break;
        }
        agd_step(&mut state, &mut cp, p.eta, p.theta)?;
        global_iter += 1;

        let threshold_sq = (p.big_b * p.big_b).max(b0 * b0);
        let disp_fired = int::<F>(state.k) * state.disp_sum > threshold_sq;
        let timeout_fired = state.k > p.big_k;
        let fired = disp_fired || timeout_fired;

        let counter = cp.counter();
        trace.push(TraceRecord {
            global_iter,
            epoch_index: epochs.len(),
            f_value: cp.problem().value(&state.x_curr),
            grad_norm: state.last_grad_norm.unwrap(),
            grad_evals: counter.grad_evals,
            fn_evals: counter.fn_evals,
            replay_grad_evals: counter.replay_grad_evals,
            restarted: fired,
            iterate: opts.record_iterates.then(|| state.x_curr.clone()),
        });

        if fired {
            restart_iters.push(state.k);
            triggers += 1;
            b0 = b0 / ada.c0.value(triggers);
            let f_trigger = cp.value(&state.x_curr);
            let required_drop = -ada.gamma * p.epsilon * p.epsilon.sqrt() / p.rho.sqrt();
            let accepted = f_trigger - f_accepted <= required_drop;
            let restart_point = state.x_curr.clone();

            let mut transcript =
                transcript_from_state(&state, true, threshold_sq, Some(restart_point.clone()));
            transcript.timeout_trigger = timeout_fired && !disp_fired;
            transcript.accepted = Some(accepted);
            epochs.push(transcript);

            if accepted {
                x_accepted = restart_point.clone();
                f_accepted = f_trigger;
                state.restart(restart_point);
            } else {
                b0 = b0 / ada.c1;
                if mode == AdaMode::UnknownLipschitz {
                    let eta = (p.eta / ada.c2).max(ada.eta_min);
                    let rho = (p.rho * ada.c2 * ada.c2).min(ada.rho_max);
                    p = p.rederived(eta, rho);
                }
                state.restart(x_accepted.clone());
            }
        }
    }

    epochs.push(transcript_from_state(
        &state,
        false,
        (p.big_b * p.big_b).max(b0 * b0),
        None,
    ));

    let (output, output_grad_norm) = if terminated {
        let x_last = state.x_curr.clone();
        let (_k0, y_hat) = select_k0_and_average(
            &mut cp,
            &state.epoch_anchor,
            &state.disp_norms,
            p.big_k,
            p.eta,
            p.theta,
        )?;
        // Output selection per the adaptive scheme: two main-count gradients.
        let grad_last = linalg::norm(&cp.gradient(&x_last));
        let grad_avg = linalg::norm(&cp.gradient(&y_hat));
        if grad_last <= grad_avg {
            (x_last, grad_last)
        } else {
            (y_hat, grad_avg)
        }
    } else {
        let grad = cp.replay_gradient(&state.x_curr);
        (state.x_curr.clone(), linalg::norm(&grad))
    };

    Ok(RunResult {
        output,
        output_grad_norm,
        counters: cp.counter(),
        epochs_completed: epochs.len(),
        restart_iters,
        trace,
        terminated,
        epochs,
        perturbations: Vec::new(),
    })
}
