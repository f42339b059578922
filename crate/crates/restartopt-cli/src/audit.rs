//! Audit and gradient-check front ends.
//!
//! `audit` re-executes a configuration (runs are deterministic, so the
//! reproduced trajectories are the saved ones) and applies the verification
//! monitors: restart bookkeeping for every restarted method, per-epoch
//! descent and output/budget bounds for strict non-adaptive runs on problems
//! with known constants.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use restartopt::params::RestartParams;
use restartopt::verify::{
    check_gradient, monitor_epoch_descent, monitor_output_and_budget, monitor_restart_bookkeeping,
    MonitorMethod,
};

use crate::config::{ExperimentConfig, ModeSpec, ProblemSpec};
use crate::runner::{build_problem, execute_config, initial_point};

/// Run the monitors over a configuration. Returns the structured text
/// report and whether every assertion passed.
pub fn audit_config(cfg: &ExperimentConfig) -> Result<(String, bool), String> {
    let built = build_problem(&cfg.problem)?;
    let artifacts = execute_config(cfg)?;
    let mut out = String::new();
    let mut clean = true;

    for artifact in &artifacts {
        out.push_str(&format!(
            "== {} seed {} ==\n",
            artifact.label, artifact.seed
        ));
        let result = match &artifact.outcome {
            Ok(r) => r,
            Err(e) => {
                out.push_str(&format!("run failed: {e}\n"));
                clean = false;
                continue;
            }
        };
        let params: Option<&dyn RestartParams<f64>> = artifact
            .ragd_params
            .as_ref()
            .map(|p| p as &dyn RestartParams<f64>)
            .or(artifact
                .rhb_params
                .as_ref()
                .map(|p| p as &dyn RestartParams<f64>));
        let Some(params) = params else {
            out.push_str("baseline method: no restart bookkeeping to audit\n");
            continue;
        };
        let adaptive = artifact.method_name.starts_with("ada-");
        if adaptive {
            out.push_str("adaptive trigger radius: bookkeeping monitor not applicable\n");
        } else {
            let report = monitor_restart_bookkeeping(result, params);
            clean &= report.is_clean();
            out.push_str(&format!("restart bookkeeping: {report}"));
        }

        let method = if artifact.ragd_params.is_some() {
            MonitorMethod::Ragd
        } else {
            MonitorMethod::Rhb
        };
        let plain_strict = artifact.mode == ModeSpec::Strict
            && !adaptive
            && artifact.method_name != "perturbed-ragd";
        if plain_strict {
            match monitor_epoch_descent(result, params, built.problem.as_ref(), method) {
                Ok(report) => {
                    clean &= report.is_clean();
                    out.push_str(&format!("epoch descent: {report}"));
                }
                Err(e) => out.push_str(&format!("epoch descent: skipped ({e})\n")),
            }
            if result.terminated {
                if let Some(lower) = built.problem.lower_bound() {
                    let x_init = initial_point(&built, &cfg.problem, artifact.seed)?;
                    let delta_f = built.problem.value(&x_init) - lower;
                    match monitor_output_and_budget(
                        result,
                        params,
                        built.problem.as_ref(),
                        delta_f,
                        method,
                    ) {
                        Ok(report) => {
                            clean &= report.is_clean();
                            out.push_str(&format!("output and budget: {report}"));
                        }
                        Err(e) => out.push_str(&format!("output and budget: skipped ({e})\n")),
                    }
                } else {
                    out.push_str("output and budget: skipped (no known lower bound)\n");
                }
            } else {
                out.push_str("output and budget: skipped (budget cap hit)\n");
            }
        }
    }
    Ok((out, clean))
}

/// Check the configured problem's closed-form gradient at five seeded
/// points (h = 1e-5, relative tolerance 1e-4). Returns the report text and
/// whether all points passed.
pub fn gradcheck_problem(spec: &ProblemSpec, seed: u64) -> Result<(String, bool), String> {
    let built = build_problem(spec)?;
    let dim = built.problem.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    let mut all_pass = true;
    for point_idx in 0..5 {
        let x: Vec<f64> = (0..dim)
            .map(|_| {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                0.5 * z
            })
            .collect();
        let report = check_gradient(built.problem.as_ref(), &x, 1e-5, 1e-4);
        all_pass &= report.pass;
        match report.worst_coordinate {
            Some(worst) if !report.pass => out.push_str(&format!(
                "point {point_idx}: FAIL max_rel_err={} worst_coordinate={worst}\n",
                report.max_rel_err
            )),
            _ => out.push_str(&format!(
                "point {point_idx}: ok max_rel_err={}\n",
                report.max_rel_err
            )),
        }
    }
    Ok((out, all_pass))
}
