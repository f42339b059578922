//! Run state, per-iteration trace, and per-epoch transcripts.

use crate::linalg;
use crate::problem::EvalCounter;
use crate::Scalar;

/// Iterate pair and displacement bookkeeping for the current epoch.
///
/// At the start of an epoch the current iterate, the previous iterate and the
/// anchor coincide and all displacement records are empty. `disp_sum` always
/// equals the sum of squares of `disp_norms`.
#[derive(Debug, Clone)]
pub struct EpochState<F> {
    pub x_curr: Vec<F>,
    pub x_prev: Vec<F>,
    /// Iterations taken in the current epoch.
    pub k: usize,
    /// Running sum of squared per-iteration displacements.
    pub disp_sum: F,
    pub epoch_anchor: Vec<F>,
    /// Per-iteration displacement norms, used for the output-window argmin.
    pub disp_norms: Vec<F>,
    /// Per-iteration distances from the epoch anchor.
    pub anchor_dists: Vec<F>,
    /// Norm of the gradient consumed by the most recent step.
    pub last_grad_norm: Option<F>,
}

impl<F: Scalar> EpochState<F> {
    pub fn start(anchor: Vec<F>) -> Self {
        Self {
            x_curr: anchor.clone(),
            x_prev: anchor.clone(),
            k: 0,
            disp_sum: F::zero(),
            epoch_anchor: anchor,
            disp_norms: Vec::new(),
            anchor_dists: Vec::new(),
            last_grad_norm: None,
        }
    }

    /// Reset to a fresh epoch anchored at `anchor`, zeroing the momentum.
    pub fn restart(&mut self, anchor: Vec<F>) {
        self.x_curr = anchor.clone();
        self.x_prev = anchor.clone();
        self.epoch_anchor = anchor;
        self.k = 0;
        self.disp_sum = F::zero();
        self.disp_norms.clear();
        self.anchor_dists.clear();
        self.last_grad_norm = None;
    }

    /// Record a completed step to `x_next`, updating displacement sums.
    pub(crate) fn advance(&mut self, x_next: Vec<F>, grad_norm: F) {
        let disp = linalg::dist(&x_next, &self.x_curr);
        self.disp_sum = self.disp_sum + disp * disp;
        self.disp_norms.push(disp);
        self.anchor_dists.push(linalg::dist(&x_next, &self.epoch_anchor));
        self.x_prev = std::mem::replace(&mut self.x_curr, x_next);
        self.k += 1;
        self.last_grad_norm = Some(grad_norm);
    }
}

/// One row of the per-iteration trace.
///
/// `grad_norm` is the norm of the gradient the step consumed: for the
/// accelerated methods that is the gradient at the extrapolated point, for
/// heavy ball and the baselines the gradient at the iterate. `f_value` is
/// diagnostic instrumentation evaluated outside the run's counters.
#[derive(Debug, Clone)]
pub struct TraceRecord<F> {
    pub global_iter: usize,
    pub epoch_index: usize,
    pub f_value: F,
    pub grad_norm: F,
    pub grad_evals: u64,
    pub fn_evals: u64,
    pub replay_grad_evals: u64,
    /// Whether this step triggered a restart.
    pub restarted: bool,
    /// Post-step iterate, kept only when iterate recording is enabled.
    pub iterate: Option<Vec<F>>,
}

/// How one epoch ended, recorded for the audit monitors.
#[derive(Debug, Clone)]
pub struct EpochTranscript<F> {
    pub anchor: Vec<F>,
    pub steps_taken: usize,
    pub disp_norms: Vec<F>,
    pub anchor_dists: Vec<F>,
    pub ended_by_restart: bool,
    /// Iteration count at which the restart condition fired.
    pub restart_trigger_k: Option<usize>,
    /// Squared radius the trigger compared against (`B^2`, or
    /// `max(B^2, B0^2)` in the adaptive runners).
    pub threshold_sq: F,
    /// True when the epoch was cut by the adaptive `k > K` rule rather than
    /// the displacement condition.
    pub timeout_trigger: bool,
    /// Adaptive decrease-test outcome; `None` for non-adaptive runs and for
    /// the final epoch.
    pub accepted: Option<bool>,
    /// Where the restart re-anchored before any perturbation: the last
    /// iterate for the accelerated methods, the two-iterate combination for
    /// heavy ball. `None` iff the epoch did not restart.
    pub restart_point: Option<Vec<F>>,
}

/// One perturbation draw at a restart of the saddle-escaping variant.
#[derive(Debug, Clone)]
pub struct PerturbationEvent<F> {
    pub global_iter: usize,
    /// Gradient norm at the last extrapolated point, tested against `B/eta`.
    pub trigger_grad_norm: F,
    pub xi_norm: F,
    /// Whether the draw was added to the restart anchor.
    pub applied: bool,
}

/// Everything a run reports.
#[derive(Debug, Clone)]
pub struct RunResult<F> {
    pub output: Vec<F>,
    /// Gradient norm recomputed at the output point.
    pub output_grad_norm: F,
    pub counters: EvalCounter,
    pub epochs_completed: usize,
    /// Trigger iterations of the restarted epochs, in order.
    pub restart_iters: Vec<usize>,
    pub trace: Vec<TraceRecord<F>>,
    /// True when the run's own loop exit fired; false when the iteration
    /// budget cut it short.
    pub terminated: bool,
    pub epochs: Vec<EpochTranscript<F>>,
    pub perturbations: Vec<PerturbationEvent<F>>,
}

/// Options shared by all runners.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Cap on total iterations across all epochs.
    pub budget: u64,
    /// Record the post-step iterate in every trace row (needed by the
    /// trajectory-equivalence oracle; off by default to keep memory small).
    pub record_iterates: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            budget: 10_000_000,
            record_iterates: false,
        }
    }
}

impl RunOptions {
    pub fn with_budget(budget: u64) -> Self {
        Self {
            budget,
            ..Self::default()
        }
    }

    pub fn recording_iterates(mut self) -> Self {
        self.record_iterates = true;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_state_invariants() {
        let s = EpochState::start(vec![1.0f64, -2.0]);
        assert_eq!(s.x_curr, s.x_prev);
        assert_eq!(s.x_curr, s.epoch_anchor);
        assert_eq!(s.k, 0);
        assert_eq!(s.disp_sum, 0.0);
        assert!(s.disp_norms.is_empty());
    }

    #[test]
    fn advance_tracks_displacements() {
        let mut s = EpochState::start(vec![0.0f64, 0.0]);
        s.advance(vec![3.0, 4.0], 1.0);
        assert_eq!(s.k, 1);
        assert_eq!(s.disp_norms, vec![5.0]);
        assert_eq!(s.disp_sum, 25.0);
        assert_eq!(s.anchor_dists, vec![5.0]);
        assert_eq!(s.x_prev, vec![0.0, 0.0]);
        s.advance(vec![3.0, 0.0], 0.5);
        // disp_sum equals the sum of squared per-step norms
        let sum: f64 = s.disp_norms.iter().map(|d| d * d).sum();
        assert!((s.disp_sum - sum).abs() <= 1e-12 * sum.max(1.0));
        s.restart(vec![1.0, 1.0]);
        assert_eq!(s.k, 0);
        assert_eq!(s.x_curr, s.epoch_anchor);
        assert!(s.disp_norms.is_empty());
    }
}
