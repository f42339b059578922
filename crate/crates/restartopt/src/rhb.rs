//! Restarted heavy-ball method.
//!
//! One epoch runs Polyak's iteration
//!
//! ```text
//! x^{k+1} = x^k - eta grad f(x^k) + (1 - theta)(x^k - x^{k-1})
//! ```
//!
//! under the same displacement restart rule as the accelerated runner, but a
//! restart re-anchors at the two-iterate combination
//! `z^k = (x^k + (1-2 theta)(1- theta) x^{k-1}) / (1 + (1-2 theta)(1-theta))`
//! rather than at the last iterate. The output averages the iterates
//! `x^0 ..= x^K0` of the final epoch over the same suffix window.
//!
//! The running-average form `m^k = beta m^{k-1} + grad f(x^k)`,
//! `x^{k+1} = x^k - eta m^k` (with `m^{-1} = 0`, `beta = 1 - theta`) is
//! provided for equivalence testing against the two-iterate form.

use crate::error::{Error, Result};
use crate::linalg;
use crate::params::{AdaMode, AdaptiveParams, RhbParams};
use crate::problem::{CountedProblem, Problem};
use crate::trace::{EpochState, EpochTranscript, RunOptions, RunResult, TraceRecord};
use crate::{int, Scalar};

fn hb_step_inner<F: Scalar>(
    state: &mut EpochState<F>,
    problem: &mut CountedProblem<'_, F>,
    eta: F,
    theta: F,
    replay: bool,
) -> Result<()> {
    let grad = if replay {
        problem.replay_gradient(&state.x_curr)
    } else {
        problem.gradient(&state.x_curr)
    };
    let momentum = F::one() - theta;
    let x_next: Vec<F> = state
        .x_curr
        .iter()
        .zip(&state.x_prev)
        .zip(&grad)
        .map(|((&x, &xp), &g)| x - eta * g + momentum * (x - xp))
        .collect();
    if !linalg::all_finite(&x_next) {
        return Err(Error::NonFinite("heavy-ball step"));
    }
    state.advance(x_next, linalg::norm(&grad));
    Ok(())
}

/// One heavy-ball step; the gradient is evaluated at the current iterate
/// (not at an extrapolated point) and charged once.
pub fn hb_step<F: Scalar>(
    state: &mut EpochState<F>,
    problem: &mut CountedProblem<'_, F>,
    eta: F,
    theta: F,
) -> Result<()> {
    hb_step_inner(state, problem, eta, theta, false)
}

/// One step of the running-average form: returns `(m, x_next)` from the
/// previous average `m_prev` and the current iterate.
pub fn hb_step_momentum_form<F: Scalar>(
    problem: &mut CountedProblem<'_, F>,
    m_prev: &[F],
    x: &[F],
    eta: F,
    beta: F,
) -> Result<(Vec<F>, Vec<F>)> {
    let grad = problem.gradient(x);
    let m: Vec<F> = m_prev
        .iter()
        .zip(&grad)
        .map(|(&mp, &g)| beta * mp + g)
        .collect();
    let x_next: Vec<F> = x.iter().zip(&m).map(|(&xi, &mi)| xi - eta * mi).collect();
    if !linalg::all_finite(&x_next) {
        return Err(Error::NonFinite("heavy-ball running-average step"));
    }
    Ok((m, x_next))
}

/// The restart anchor `z^k`, a convex combination of the last two iterates.
pub fn restart_anchor_z<F: Scalar>(x_curr: &[F], x_prev: &[F], theta: F) -> Vec<F> {
    let c = (F::one() - theta - theta) * (F::one() - theta);
    let denom = F::one() + c;
    x_curr
        .iter()
        .zip(x_prev)
        .map(|(&x, &xp)| (x + c * xp) / denom)
        .collect()
}

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

/// Replay the final epoch from its anchor and average `x^0 ..= x^K0`.
pub fn replay_average_x<F: Scalar>(
    problem: &mut CountedProblem<'_, F>,
    anchor: &[F],
    k0: usize,
    eta: F,
    theta: F,
) -> Result<Vec<F>> {
    let mut state = EpochState::start(anchor.to_vec());
    let mut acc = anchor.to_vec();
    for _ in 1..=k0 {
        hb_step_inner(&mut state, problem, eta, theta, true)?;
        for (a, xi) in acc.iter_mut().zip(&state.x_curr) {
            *a = *a + *xi;
        }
    }
    let count = int::<F>(k0 + 1);
    Ok(acc.into_iter().map(|a| a / count).collect())
}

/// Run restarted heavy ball until an epoch survives `K` iterations, or the
/// budget is exhausted.
pub fn run_rhb<F: Scalar>(
    problem: &dyn Problem<F>,
    params: &RhbParams<F>,
    x_init: &[F],
    opts: RunOptions,
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
        hb_step(&mut state, &mut cp, params.eta, params.theta)?;
        global_iter += 1;
        let fired = int::<F>(state.k) * state.disp_sum > b_sq;
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
            let z = restart_anchor_z(&state.x_curr, &state.x_prev, params.theta);
            epochs.push(transcript_from_state(&state, true, b_sq, Some(z.clone())));
            state.restart(z);
        }
    }

    epochs.push(transcript_from_state(&state, false, b_sq, None));

    let (output, output_grad_norm) = if terminated {
        let k0 = crate::ragd::select_k0(&state.disp_norms, params.big_k);
        let x_hat = replay_average_x(&mut cp, &state.epoch_anchor, k0, params.eta, params.theta)?;
        let grad = cp.replay_gradient(&x_hat);
        let norm = linalg::norm(&grad);
        (x_hat, norm)
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

/// Adaptive restarted heavy ball: mirrors the adaptive accelerated runner
/// with `z^k` as the accept-time anchor and the decrease test evaluated at
/// `z^k`. The output is whichever of the last iterate and the suffix average
/// has the smaller gradient norm.
pub fn run_ada_rhb<F: Scalar>(
    problem: &dyn Problem<F>,
    params: &RhbParams<F>,
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
        hb_step(&mut state, &mut cp, p.eta, p.theta)?;
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
            let z = restart_anchor_z(&state.x_curr, &state.x_prev, p.theta);
            let f_trigger = cp.value(&z);
            let required_drop = -ada.gamma * p.epsilon * p.epsilon.sqrt() / p.rho.sqrt();
            let accepted = f_trigger - f_accepted <= required_drop;

            let mut transcript = transcript_from_state(&state, true, threshold_sq, Some(z.clone()));
            transcript.timeout_trigger = timeout_fired && !disp_fired;
            transcript.accepted = Some(accepted);
            epochs.push(transcript);

            if accepted {
                x_accepted = z.clone();
                f_accepted = f_trigger;
                state.restart(z);
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
        let k0 = crate::ragd::select_k0(&state.disp_norms, p.big_k);
        let x_hat = replay_average_x(&mut cp, &state.epoch_anchor, k0, p.eta, p.theta)?;
        let grad_last = linalg::norm(&cp.gradient(&x_last));
        let grad_avg = linalg::norm(&cp.gradient(&x_hat));
        if grad_last <= grad_avg {
            (x_last, grad_last)
        } else {
            (x_hat, grad_avg)
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{C0Schedule, Mode};
    use crate::problems::{cosine_problem, diag_quadratic_problem};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn step_matches_hand_recurrence() {
        // f(x) = x^2/2, eta = 0.25, theta = 0.2:
        // x1 = 0.75; x2 = 0.75 - 0.1875 + 0.8 (-0.25) = 0.3625.
        let p = diag_quadratic_problem::<f64>(vec![1.0]);
        let mut cp = CountedProblem::new(&p);
        let mut state = EpochState::start(vec![1.0]);
        hb_step(&mut state, &mut cp, 0.25, 0.2).unwrap();
        assert!(close(state.x_curr[0], 0.75, 1e-15));
        hb_step(&mut state, &mut cp, 0.25, 0.2).unwrap();
        assert!(close(state.x_curr[0], 0.3625, 1e-15));
    }

    #[test]
    fn momentum_form_matches_hand_recurrence() {
        // m0 = 1, x1 = 0.75; m1 = 0.8 + 0.75 = 1.55, x2 = 0.3625.
        let p = diag_quadratic_problem::<f64>(vec![1.0]);
        let mut cp = CountedProblem::new(&p);
        let (m, x) = hb_step_momentum_form(&mut cp, &[0.0], &[1.0], 0.25, 0.8).unwrap();
        assert!(close(m[0], 1.0, 1e-15));
        assert!(close(x[0], 0.75, 1e-15));
        let (m, x) = hb_step_momentum_form(&mut cp, &m, &x, 0.25, 0.8).unwrap();
        assert!(close(m[0], 1.55, 1e-15));
        assert!(close(x[0], 0.3625, 1e-15));
    }

    #[test]
    fn momentum_form_degenerate_cases() {
        let p = diag_quadratic_problem::<f64>(vec![1.0, 2.0]);
        let mut cp = CountedProblem::new(&p);
        // beta = 0 is a plain gradient step
        let (_, x) = hb_step_momentum_form(&mut cp, &[0.0, 0.0], &[1.0, 1.0], 0.25, 0.0).unwrap();
        assert_eq!(x, vec![0.75, 0.5]);
        // zero gradient keeps the trajectory constant
        let (m, x) = hb_step_momentum_form(&mut cp, &[0.0, 0.0], &[0.0, 0.0], 0.25, 0.8).unwrap();
        assert_eq!(m, vec![0.0, 0.0]);
        assert_eq!(x, vec![0.0, 0.0]);
    }

    #[test]
    fn theta_one_is_a_gradient_step_and_fixed_points_stay() {
        let p = diag_quadratic_problem::<f64>(vec![1.0, 2.0]);
        let mut cp = CountedProblem::new(&p);
        let mut state = EpochState::start(vec![1.0, 1.0]);
        hb_step(&mut state, &mut cp, 0.25, 1.0).unwrap();
        assert_eq!(state.x_curr, vec![0.75, 0.5]);

        let mut at_min = EpochState::start(vec![0.0, 0.0]);
        hb_step(&mut at_min, &mut cp, 0.25, 0.2).unwrap();
        assert_eq!(at_min.x_curr, vec![0.0, 0.0]);
    }

    #[test]
    fn restart_anchor_examples() {
        // theta = 0: plain midpoint
        let z = restart_anchor_z(&[1.0f64], &[3.0], 0.0);
        assert!(close(z[0], 2.0, 1e-15));
        // theta = 0.2: (0.3625 + 0.48 * 0.75) / 1.48
        let z = restart_anchor_z(&[0.3625f64], &[0.75], 0.2);
        assert!(close(z[0], 0.7225 / 1.48, 1e-15));
        assert!(close(z[0], 0.48818, 1e-5));
        // equal points are fixed up to roundoff in the combination
        let z = restart_anchor_z(&[1.5f64, -2.0], &[1.5, -2.0], 0.07);
        assert!(close(z[0], 1.5, 1e-15));
        assert!(close(z[1], -2.0, 1e-15));
    }

    #[test]
    fn restart_anchor_stays_on_the_segment() {
        for &theta in &[0.0f64, 0.02, 0.05, 0.1] {
            let c: f64 = (1.0 - 2.0 * theta) * (1.0 - theta);
            let alpha = 1.0 / (1.0 + c);
            assert!((0.5..=1.0 / 1.72 + 1e-12).contains(&alpha), "alpha = {alpha}");
            let z = restart_anchor_z(&[2.0f64], &[-1.0], theta);
            assert!(z[0] >= -1.0 && z[0] <= 2.0);
        }
    }

    #[test]
    fn quadratic_run_single_epoch_average() {
        let problem = diag_quadratic_problem::<f64>(vec![1.0]);
        let params = RhbParams::practical(0.25, 0.2, 10.0, 5, 1e-2, 1.0).unwrap();
        let result = run_rhb(&problem, &params, &[1.0], RunOptions::default()).unwrap();
        assert!(result.terminated);
        assert!(result.restart_iters.is_empty());

        // independent recurrence
        let (mut x_prev, mut x) = (1.0f64, 1.0f64);
        let mut xs = vec![1.0f64];
        let mut disps = Vec::new();
        for _ in 0..5 {
            let next = x - 0.25 * x + 0.8 * (x - x_prev);
            disps.push((next - x).abs());
            x_prev = x;
            x = next;
            xs.push(x);
        }
        // K0 = argmin over k in {2,3,4}
        let k0 = 2 + disps[2..5]
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let x_hat: f64 = xs[..=k0].iter().sum::<f64>() / (k0 + 1) as f64;
        assert!(close(result.output[0], x_hat, 1e-12));
    }

    #[test]
    fn strict_run_terminates_on_cosine() {
        let problem = cosine_problem(4);
        let params = RhbParams::strict(1.0, 1.0, 1.6e-7).unwrap();
        assert_eq!(params.mode, Mode::Strict);
        let result = run_rhb(&problem, &params, &[1.0, -0.5, 2.0, 0.3], RunOptions::default())
            .unwrap();
        assert!(result.terminated);
        assert!(result.output_grad_norm <= 242.0 * 1.6e-7);
    }

    #[test]
    fn stationary_start_stays_put() {
        let problem = diag_quadratic_problem::<f64>(vec![1.0, 2.0, 0.5]);
        let params = RhbParams::strict(2.0, 1.0, 1.6e-7).unwrap();
        let x_init = vec![0.0; 3];
        let result = run_rhb(&problem, &params, &x_init, RunOptions::default()).unwrap();
        assert_eq!(result.output, x_init);
        assert_eq!(result.output_grad_norm, 0.0);
    }

    #[test]
    fn two_forms_agree_over_a_hundred_iterations() {
        let problem = cosine_problem(5);
        let theta = 0.2f64;
        let eta = 0.25f64;
        let x_init = vec![0.4, -1.3, 2.2, -0.7, 1.9];

        let mut cp = CountedProblem::new(&problem);
        let mut state = EpochState::start(x_init.clone());
        let mut cp2 = CountedProblem::new(&problem);
        let mut m = vec![0.0; 5];
        let mut x = x_init;
        for _ in 0..100 {
            hb_step(&mut state, &mut cp, eta, theta).unwrap();
            let (m_next, x_next) = hb_step_momentum_form(&mut cp2, &m, &x, eta, 1.0 - theta).unwrap();
            m = m_next;
            x = x_next;
            for (a, b) in state.x_curr.iter().zip(&x) {
                let denom = a.abs().max(1.0);
                assert!(((a - b) / denom).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn theta_one_run_equals_gradient_descent() {
        let problem = cosine_problem(5);
        let x_init = vec![0.8, -1.9, 2.4, -0.2, 1.5];
        let opts = RunOptions::with_budget(100).recording_iterates();
        let params = RhbParams::practical(0.25, 1.0, 1e9, 100, 1e-2, 1.0).unwrap();
        let hb = run_rhb(&problem, &params, &x_init, opts).unwrap();
        let gd = crate::baselines::run_gd(&problem, 0.25, &x_init, 100, opts).unwrap();
        assert!(crate::verify::check_trajectory_equivalence(&hb, &gd, 1e-12).unwrap());
    }

    #[test]
    fn adaptive_rollback_divides_b0_by_c0_and_c1() {
        let problem = cosine_problem(4);
        let params = RhbParams::practical(0.25, 0.1, 1e-6, 50, 1e-2, 1.0).unwrap();
        let ada = AdaptiveParams::new(1.0, 1e12, C0Schedule::Constant(2.0), 5.0).unwrap();
        let x_init = vec![1.0, -2.0, 0.5, 2.5];
        let result = run_ada_rhb(
            &problem,
            &params,
            &ada,
            AdaMode::KnownLipschitz,
            &x_init,
            RunOptions::with_budget(2_000),
        )
        .unwrap();
        let rollbacks = result
            .epochs
            .iter()
            .filter(|e| e.accepted == Some(false))
            .count();
        assert!(rollbacks >= 1);
        for (i, e) in result.epochs.iter().enumerate() {
            if e.accepted == Some(false) && i + 1 < result.epochs.len() {
                assert_eq!(result.epochs[i + 1].anchor, x_init);
            }
        }
    }

    #[test]
    fn dominated_b0_with_passing_tests_matches_the_plain_runner() {
        // B0 <= B and accepted decrease tests: the adaptive runner must
        // retrace the plain one exactly, restarts included.
        let problem = cosine_problem(6);
        let params = RhbParams::practical(0.25, 0.1, 0.35, 40, 1e-2, 1.0).unwrap();
        let ada =
            AdaptiveParams::new(params.big_b / 2.0, 0.0, C0Schedule::Constant(2.0), 2.0).unwrap();
        let x_init = vec![2.4, -1.8, 0.9, -2.2, 1.6, 0.3];
        let opts = RunOptions::with_budget(100_000).recording_iterates();
        let plain = run_rhb(&problem, &params, &x_init, opts).unwrap();
        let adaptive = run_ada_rhb(
            &problem,
            &params,
            &ada,
            AdaMode::KnownLipschitz,
            &x_init,
            opts,
        )
        .unwrap();
        assert!(!plain.restart_iters.is_empty());
        assert!(adaptive
            .epochs
            .iter()
            .filter(|e| e.accepted.is_some())
            .all(|e| e.accepted == Some(true)));
        assert_eq!(plain.restart_iters, adaptive.restart_iters);
        assert_eq!(plain.trace.len(), adaptive.trace.len());
        assert!(
            crate::verify::check_trajectory_equivalence(&plain, &adaptive, 0.0).unwrap(),
            "adaptive trajectory deviated from the plain runner"
        );
    }

    #[test]
    fn gamma_zero_accepts_any_non_increase() {
        let problem = cosine_problem(5);
        let params = RhbParams::practical(0.25, 0.1, 1e-3, 30, 1e-2, 1.0).unwrap();
        let ada = AdaptiveParams::new(8e-3, 0.0, C0Schedule::Constant(10.0), 10.0).unwrap();
        let result = run_ada_rhb(
            &problem,
            &params,
            &ada,
            AdaMode::KnownLipschitz,
            &[2.0, -2.0, 1.0, -1.0, 0.5],
            RunOptions::default(),
        )
        .unwrap();
        assert!(result.terminated);
        assert!(result
            .epochs
            .iter()
            .filter(|e| e.accepted.is_some())
            .all(|e| e.accepted == Some(true)));
    }
}
