//! Independent oracles and runtime monitors.
//!
//! Everything here audits a run from the outside: finite differences check
//! closed-form gradients, the bookkeeping monitor re-checks the restart
//! inequalities from the recorded epoch transcripts, the descent and output
//! monitors re-evaluate the objective at epoch boundaries and at the output
//! point. Audit evaluations call the problem directly and never touch the
//! counters of the run under audit.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg;
use crate::params::{Mode, RestartParams};
use crate::problem::Problem;
use crate::trace::RunResult;
use crate::{int, lit, Scalar};

/// Which guarantee family a monitor asserts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorMethod {
    Ragd,
    Rhb,
}

/// Outcome of comparing a closed-form gradient against central differences.
#[derive(Debug, Clone)]
pub struct GradCheckReport<F> {
    pub max_abs_err: F,
    /// Relative error with denominator `max(1, |reference coordinate|)`.
    pub max_rel_err: F,
    pub worst_coordinate: Option<usize>,
    pub h: F,
    pub pass: bool,
}

/// One failed assertion inside a monitor report.
#[derive(Debug, Clone)]
pub struct Violation<F> {
    pub epoch_index: usize,
    pub quantity: &'static str,
    pub bound: F,
    pub observed: F,
}

/// Result of auditing one run; no violations means every assertion passed.
#[derive(Debug, Clone)]
pub struct MonitorReport<F> {
    pub epochs_checked: usize,
    pub violations: Vec<Violation<F>>,
}

impl<F> Default for MonitorReport<F> {
    fn default() -> Self {
        Self {
            epochs_checked: 0,
            violations: Vec::new(),
        }
    }
}

impl<F: Scalar> MonitorReport<F> {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl<F: Scalar> fmt::Display for MonitorReport<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "epochs_checked={} violations={}",
            self.epochs_checked,
            self.violations.len()
        )?;
        for v in &self.violations {
            writeln!(
                f,
                "  epoch {} {}: observed {} bound {}",
                v.epoch_index, v.quantity, v.observed, v.bound
            )?;
        }
        Ok(())
    }
}

/// Central-difference gradient, coordinate `i` being
/// `(f(x + h e_i) - f(x - h e_i)) / (2h)`. Costs two function evaluations
/// per coordinate; those calls go straight to the problem and are not
/// charged to any run.
pub fn finite_diff_grad<F: Scalar>(problem: &dyn Problem<F>, x: &[F], h: F) -> Vec<F> {
    let two_h = h + h;
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let plus = problem.value(&probe);
        probe[i] = orig - h;
        let minus = problem.value(&probe);
        probe[i] = orig;
        grad.push((plus - minus) / two_h);
    }
    grad
}

/// Compare the closed-form gradient against the finite-difference oracle.
pub fn check_gradient<F: Scalar>(
    problem: &dyn Problem<F>,
    x: &[F],
    h: F,
    rel_tol: F,
) -> GradCheckReport<F> {
    let analytic = problem.gradient(x);
    let numeric = finite_diff_grad(problem, x, h);
    let mut max_abs = F::zero();
    let mut max_rel = F::zero();
    let mut worst = None;
    for (i, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        let abs = (*a - *n).abs();
        let rel = abs / F::one().max(n.abs());
        if abs > max_abs {
            max_abs = abs;
        }
        if rel > max_rel {
            max_rel = rel;
            worst = Some(i);
        }
    }
    GradCheckReport {
        max_abs_err: max_abs,
        max_rel_err: max_rel,
        worst_coordinate: worst,
        h,
        pass: max_rel <= rel_tol,
    }
}

/// Re-check the restart bookkeeping of every epoch from its transcript:
/// a restarted epoch must have fired strictly (`K * sum > B^2`) with all
/// earlier prefixes at or below `B^2`, a final epoch must have every prefix
/// at or below `B^2`, and every pre-trigger iterate stays within `B` of the
/// anchor. Comparisons are exact.
pub fn monitor_restart_bookkeeping<F: Scalar>(
    result: &RunResult<F>,
    params: &dyn RestartParams<F>,
) -> MonitorReport<F> {
    let big_b = params.big_b();
    let b_sq = big_b * big_b;
    let mut report = MonitorReport::default();

    for (epoch_index, epoch) in result.epochs.iter().enumerate() {
        report.epochs_checked += 1;
        let steps = epoch.steps_taken;
        let mut prefix = F::zero();
        for k in 1..=steps {
            prefix = prefix + epoch.disp_norms[k - 1] * epoch.disp_norms[k - 1];
            let lhs = int::<F>(k) * prefix;
            let is_trigger_step = epoch.ended_by_restart && k == steps;
            if is_trigger_step {
                if epoch.timeout_trigger {
                    continue;
                }
                if !(lhs > b_sq) {
                    report.violations.push(Violation {
                        epoch_index,
                        quantity: "trigger strictness",
                        bound: b_sq,
                        observed: lhs,
                    });
                }
            } else if lhs > b_sq {
                report.violations.push(Violation {
                    epoch_index,
                    quantity: "pre-trigger displacement",
                    bound: b_sq,
                    observed: lhs,
                });
            }
        }
        // iterates before the trigger stay within B of the anchor
        let within = if epoch.ended_by_restart {
            steps.saturating_sub(1)
        } else {
            steps
        };
        for dist in epoch.anchor_dists.iter().take(within) {
            if *dist > big_b {
                report.violations.push(Violation {
                    epoch_index,
                    quantity: "anchor distance",
                    bound: big_b,
                    observed: *dist,
                });
            }
        }
    }
    report
}

fn require_strict<F: Scalar>(params: &dyn RestartParams<F>, context: &'static str) -> Result<()> {
    if params.mode() != Mode::Strict {
        return Err(Error::Regime {
            context,
            theta: params.theta().to_f64().unwrap_or(f64::NAN),
            limit: f64::NAN,
        });
    }
    Ok(())
}

fn check_family_relation<F: Scalar>(
    params: &dyn RestartParams<F>,
    method: MonitorMethod,
    context: &'static str,
) -> Result<()> {
    // The descent corollaries hold for the standard radius relation
    // (B^2 rho = eps, or 4 B^2 rho = eps for heavy ball); reject parameter
    // sets from other derivations.
    let b_sq_rho = params.big_b() * params.big_b() * params.rho();
    let expected = match method {
        MonitorMethod::Ragd => params.epsilon(),
        MonitorMethod::Rhb => params.epsilon() / lit::<F>(4.0),
    };
    let rel = ((b_sq_rho - expected) / expected).abs();
    if rel > lit::<F>(1e-9) {
        return Err(Error::Regime {
            context,
            theta: params.theta().to_f64().unwrap_or(f64::NAN),
            limit: f64::NAN,
        });
    }
    Ok(())
}

/// Assert the per-epoch descent guarantee on every displacement-restarted
/// epoch: `f(restart point) - f(anchor)` at most `-(7/8) eps^{3/2}/sqrt(rho)`
/// for the accelerated method and `-eps^{3/2}/sqrt(rho)` for heavy ball.
/// The objective values are recomputed here rather than read from the trace;
/// these audit evaluations are not charged to the run. Requires strict-mode
/// parameters of the matching family.
pub fn monitor_epoch_descent<F: Scalar>(
    result: &RunResult<F>,
    params: &dyn RestartParams<F>,
    problem: &dyn Problem<F>,
    method: MonitorMethod,
) -> Result<MonitorReport<F>> {
    require_strict(params, "per-epoch descent monitor needs strict parameters")?;
    check_family_relation(params, method, "per-epoch descent monitor: radius relation")?;
    let eps = params.epsilon();
    let required = match method {
        MonitorMethod::Ragd => -lit::<F>(7.0 / 8.0) * eps * eps.sqrt() / params.rho().sqrt(),
        MonitorMethod::Rhb => -(eps * eps.sqrt()) / params.rho().sqrt(),
    };
    let mut report = MonitorReport::default();
    for (epoch_index, epoch) in result.epochs.iter().enumerate() {
        if !epoch.ended_by_restart || epoch.timeout_trigger || epoch.accepted == Some(false) {
            continue;
        }
        let restart_point = match &epoch.restart_point {
            Some(p) => p,
            None => continue,
        };
        report.epochs_checked += 1;
        let f_anchor = problem.value(&epoch.anchor);
        let f_restart = problem.value(restart_point);
        let drop = f_restart - f_anchor;
        if !(drop <= required) {
            report.violations.push(Violation {
                epoch_index,
                quantity: "epoch descent",
                bound: required,
                observed: drop,
            });
        }
    }
    Ok(report)
}

/// Assert the terminated-run guarantees: the recomputed gradient norm at the
/// output is at most `82 eps` (accelerated) or `242 eps` (heavy ball), and
/// the main gradient count is at most
/// `delta_f L^{1/2} rho^{1/4} / eps^{7/4}` with `L = 1/(4 eta)` (replay
/// evaluations excluded).
pub fn monitor_output_and_budget<F: Scalar>(
    result: &RunResult<F>,
    params: &dyn RestartParams<F>,
    problem: &dyn Problem<F>,
    delta_f: F,
    method: MonitorMethod,
) -> Result<MonitorReport<F>> {
    require_strict(params, "output monitor needs strict parameters")?;
    if !result.terminated {
        return Err(Error::InvalidParameter(
            "output monitor needs a terminated run".into(),
        ));
    }
    let eps = params.epsilon();
    let factor = match method {
        MonitorMethod::Ragd => lit::<F>(82.0),
        MonitorMethod::Rhb => lit::<F>(242.0),
    };
    let mut report = MonitorReport {
        epochs_checked: result.epochs.len(),
        ..MonitorReport::default()
    };

    let grad_norm = linalg::norm(&problem.gradient(&result.output));
    if !(grad_norm <= factor * eps) {
        report.violations.push(Violation {
            epoch_index: result.epochs.len().saturating_sub(1),
            quantity: "output gradient norm",
            bound: factor * eps,
            observed: grad_norm,
        });
    }

    let l = F::one() / (lit::<F>(4.0) * params.eta());
    let budget = delta_f * l.sqrt() * params.rho().sqrt().sqrt() / eps.powf(lit::<F>(1.75));
    let observed = int::<F>(result.counters.grad_evals as usize);
    if !(observed <= budget) {
        report.violations.push(Violation {
            epoch_index: 0,
            quantity: "gradient evaluation budget",
            bound: budget,
            observed,
        });
    }
    Ok(report)
}

/// Compare two recorded trajectories iterate by iterate: true when every
/// coordinate pair agrees within `rel_tol` (denominator
/// `max(1, |a|, |b|)`). Both runs must have recorded iterates of equal
/// length.
pub fn check_trajectory_equivalence<F: Scalar>(
    run_a: &RunResult<F>,
    run_b: &RunResult<F>,
    rel_tol: F,
) -> Result<bool> {
    if run_a.trace.len() != run_b.trace.len() {
        return Err(Error::LengthMismatch {
            left: run_a.trace.len(),
            right: run_b.trace.len(),
        });
    }
    for (ra, rb) in run_a.trace.iter().zip(&run_b.trace) {
        let (xa, xb) = match (&ra.iterate, &rb.iterate) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::MissingIterates),
        };
        if xa.len() != xb.len() {
            return Err(Error::LengthMismatch {
                left: xa.len(),
                right: xb.len(),
            });
        }
        for (a, b) in xa.iter().zip(xb) {
            let denom = F::one().max(a.abs()).max(b.abs());
            if (*a - *b).abs() > rel_tol * denom {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
