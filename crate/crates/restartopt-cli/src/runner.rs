//! Build problems and methods from a configuration, execute every
//! (method, seed) pair, and write the per-run CSV traces plus the JSON
//! summary. Independent runs execute in parallel, capped by the
//! `RESTARTOPT_THREADS` environment variable; each run writes its own file
//! and the summary is assembled after all runs join, so artifacts do not
//! depend on scheduling.

use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use restartopt::baselines::{run_gd, run_heuristic_ragd, run_nlcg, LineSearchConfig};
use restartopt::params::{perturbed_params, AdaMode, AdaptiveParams, C0Schedule};
use restartopt::problems::{
    cosine_problem, diag_quadratic_problem, generate_synthetic_mc, generate_synthetic_one_bit,
    load_ratings_csv, matrix_completion_problem, one_bit_problem, svd_init, CorruptedGradient,
    ObservedMatrix,
};
use restartopt::ragd::{run_ada_ragd, run_perturbed_ragd, run_ragd};
use restartopt::rhb::{run_ada_rhb, run_rhb};
use restartopt::{Problem, RagdParams64, RhbParams64, RunOptions, RunResult64};

use crate::config::{
    AdaptiveModeSpec, DataFormat, ExperimentConfig, InitSpec, MethodSpec, ModeSpec, ProblemSpec,
};

/// A constructed problem plus everything needed to derive starting points.
pub struct BuiltProblem {
    pub problem: Box<dyn Problem<f64>>,
    pub observations: Option<ObservedMatrix<f64>>,
    pub rank: Option<usize>,
    pub default_init: InitSpec,
}

pub fn build_problem(spec: &ProblemSpec) -> Result<BuiltProblem, String> {
    let uniform_default = InitSpec::Uniform {
        low: -3.0,
        high: 3.0,
    };
    let built = match spec {
        ProblemSpec::Cosine { dim, .. } => BuiltProblem {
            problem: Box::new(cosine_problem(*dim)),
            observations: None,
            rank: None,
            default_init: uniform_default,
        },
        ProblemSpec::CorruptedCosine {
            dim, coordinate, ..
        } => BuiltProblem {
            problem: Box::new(CorruptedGradient::new(cosine_problem(*dim), *coordinate)),
            observations: None,
            rank: None,
            default_init: uniform_default,
        },
        ProblemSpec::DiagQuadratic { lambdas, .. } => BuiltProblem {
            problem: Box::new(diag_quadratic_problem(lambdas.clone())),
            observations: None,
            rank: None,
            default_init: uniform_default,
        },
        ProblemSpec::SyntheticMc {
            rows,
            cols,
            rank,
            density,
            noise,
            data_seed,
            ..
        } => {
            let obs = generate_synthetic_mc::<f64>(*rows, *cols, *rank, *density, *noise, *data_seed)
                .map_err(|e| format!("problem build error: {e}"))?;
            BuiltProblem {
                problem: Box::new(
                    matrix_completion_problem(obs.clone(), *rank)
                        .map_err(|e| format!("problem build error: {e}"))?,
                ),
                observations: Some(obs),
                rank: Some(*rank),
                default_init: InitSpec::Svd,
            }
        }
        ProblemSpec::SyntheticOneBit {
            rows,
            cols,
            rank,
            density,
            data_seed,
            ..
        } => {
            let obs = generate_synthetic_one_bit::<f64>(*rows, *cols, *rank, *density, *data_seed)
                .map_err(|e| format!("problem build error: {e}"))?;
            BuiltProblem {
                problem: Box::new(
                    one_bit_problem(obs.clone(), *rank)
                        .map_err(|e| format!("problem build error: {e}"))?,
                ),
                observations: Some(obs),
                rank: Some(*rank),
                default_init: InitSpec::Svd,
            }
        }
        ProblemSpec::MatrixCompletion {
            path, format, rank, ..
        } => {
            let obs = load_observations(path, *format)?;
            BuiltProblem {
                problem: Box::new(
                    matrix_completion_problem(obs.clone(), *rank)
                        .map_err(|e| format!("problem build error: {e}"))?,
                ),
                observations: Some(obs),
                rank: Some(*rank),
                default_init: InitSpec::Svd,
            }
        }
        ProblemSpec::OneBit {
            path, format, rank, ..
        } => {
            let obs = load_observations(path, *format)?;
            BuiltProblem {
                problem: Box::new(
                    one_bit_problem(obs.clone(), *rank)
                        .map_err(|e| format!("problem build error: {e}"))?,
                ),
                observations: Some(obs),
                rank: Some(*rank),
                default_init: InitSpec::Svd,
            }
        }
    };
    Ok(built)
}

fn load_observations(path: &str, format: DataFormat) -> Result<ObservedMatrix<f64>, String> {
    match format {
        DataFormat::Ratings => {
            load_ratings_csv(path).map_err(|e| format!("failed to load {path}: {e}"))
        }
        DataFormat::Coo => {
            let file =
                fs::File::open(path).map_err(|e| format!("failed to open {path}: {e}"))?;
            ObservedMatrix::read_coo(std::io::BufReader::new(file))
                .map_err(|e| format!("failed to load {path}: {e}"))
        }
    }
}

/// Starting point for one run seed.
pub fn initial_point(
    built: &BuiltProblem,
    spec: &ProblemSpec,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let dim = built.problem.dim();
    let init = spec.init_spec().unwrap_or(&built.default_init);
    match init {
        InitSpec::Zeros => Ok(vec![0.0; dim]),
        InitSpec::Uniform { low, high } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..dim).map(|_| rng.random_range(*low..*high)).collect())
        }
        InitSpec::Gaussian { scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..dim)
                .map(|_| {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    z * scale
                })
                .collect())
        }
        InitSpec::Svd => {
            let obs = built
                .observations
                .as_ref()
                .ok_or("config error: svd init needs a completion problem")?;
            let rank = built.rank.expect("completion problems carry a rank");
            let init = svd_init(obs, rank, seed).map_err(|e| format!("svd init failed: {e}"))?;
            Ok(init.factors.flatten())
        }
    }
}

/// Everything the harness keeps about one executed (method, seed) pair.
pub struct RunArtifact {
    pub label: String,
    pub method_name: String,
    pub mode: ModeSpec,
    pub seed: u64,
    pub outcome: Result<RunResult64, String>,
    pub wall_time_s: f64,
    /// Strict-mode constants, kept for the audit monitors.
    pub strict_constants: Option<(f64, f64, f64)>, // (L, rho, epsilon)
    /// Resolved parameter sets, kept for the audit monitors.
    pub ragd_params: Option<RagdParams64>,
    pub rhb_params: Option<RhbParams64>,
}

/// Resolved method, ready to run against a problem.
enum ResolvedMethod {
    Gd {
        eta: f64,
    },
    HeuristicRagd {
        eta: f64,
    },
    Nlcg {
        ls: LineSearchConfig<f64>,
    },
    Ragd {
        params: RagdParams64,
    },
    PerturbedRagd {
        params: RagdParams64,
        perturb: restartopt::PerturbParams64,
    },
    Rhb {
        params: RhbParams64,
    },
    AdaRagd {
        params: RagdParams64,
        ada: restartopt::AdaptiveParams64,
        mode: AdaMode,
    },
    AdaRhb {
        params: RhbParams64,
        ada: restartopt::AdaptiveParams64,
        mode: AdaMode,
    },
}

fn require(field: Option<f64>, what: &str, method: &str) -> Result<f64, String> {
    field.ok_or_else(|| format!("config error: method '{method}' needs '{what}'"))
}

fn lipschitz_or_field(
    field: Option<f64>,
    problem_value: Option<f64>,
    what: &str,
    method: &str,
) -> Result<f64, String> {
    field.or(problem_value).ok_or_else(|| {
        format!("config error: method '{method}' needs '{what}' (problem declares none)")
    })
}

/// The experiment-section defaults for the adaptive methods.
struct PaperPractical {
    epsilon: f64,
    eta: f64,
    rho: f64,
    theta_multiplier: f64,
    b0: f64,
    gamma: f64,
    c1: f64,
    c2: f64,
}

impl Default for PaperPractical {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            eta: 2.0,
            rho: 1.0,
            theta_multiplier: 0.005,
            b0: 100.0,
            gamma: 1e-5,
            c1: 10.0,
            c2: 2.0,
        }
    }
}

fn resolve_method(
    spec: &MethodSpec,
    problem: &dyn Problem<f64>,
    run_seed: u64,
) -> Result<ResolvedMethod, String> {
    let name = spec.name.as_str();
    let mode = spec.mode.unwrap_or_default();
    let err = |e: restartopt::Error| format!("config error: method '{name}': {e}");

    let strict_triplet = |spec: &MethodSpec| -> Result<(f64, f64, f64), String> {
        let l = lipschitz_or_field(spec.l, problem.lipschitz_gradient(), "l", name)?;
        let rho = lipschitz_or_field(spec.rho, problem.lipschitz_hessian(), "rho", name)?;
        let epsilon = require(spec.epsilon, "epsilon", name)?;
        Ok((l, rho, epsilon))
    };

    let practical_ragd = |spec: &MethodSpec| -> Result<RagdParams64, String> {
        if let Some(multiplier) = spec.theta_multiplier {
            let eta = require(spec.eta, "eta", name)?;
            let epsilon = require(spec.epsilon, "epsilon", name)?;
            let rho = spec.rho.unwrap_or(1.0);
            RagdParams64::practical_multiplier(eta, multiplier, epsilon, rho).map_err(err)
        } else {
            let eta = require(spec.eta, "eta", name)?;
            let theta = require(spec.theta, "theta", name)?;
            let b = require(spec.b, "b", name)?;
            let k = spec
                .k
                .ok_or_else(|| format!("config error: method '{name}' needs 'k'"))?;
            let epsilon = spec.epsilon.unwrap_or(1e-4);
            let rho = spec.rho.unwrap_or(1.0);
            RagdParams64::practical(eta, theta, b, k, epsilon, rho).map_err(err)
        }
    };

    let practical_rhb = |spec: &MethodSpec| -> Result<RhbParams64, String> {
        if let Some(multiplier) = spec.theta_multiplier {
            let eta = require(spec.eta, "eta", name)?;
            let epsilon = require(spec.epsilon, "epsilon", name)?;
            let rho = spec.rho.unwrap_or(1.0);
            RhbParams64::practical_multiplier(eta, multiplier, epsilon, rho).map_err(err)
        } else {
            let eta = require(spec.eta, "eta", name)?;
            let theta = require(spec.theta, "theta", name)?;
            let b = require(spec.b, "b", name)?;
            let k = spec
                .k
                .ok_or_else(|| format!("config error: method '{name}' needs 'k'"))?;
            let epsilon = spec.epsilon.unwrap_or(1e-4);
            let rho = spec.rho.unwrap_or(1.0);
            RhbParams64::practical(eta, theta, b, k, epsilon, rho).map_err(err)
        }
    };

    match name {
        "gd" => Ok(ResolvedMethod::Gd {
            eta: require(spec.eta, "eta", name)?,
        }),
        "heuristic-ragd" => Ok(ResolvedMethod::HeuristicRagd {
            eta: require(spec.eta, "eta", name)?,
        }),
        "nlcg" => Ok(ResolvedMethod::Nlcg {
            ls: LineSearchConfig::new(require(spec.eta, "eta", name)?),
        }),
        "ragd" => {
            let params = match mode {
                ModeSpec::Strict => {
                    let (l, rho, epsilon) = strict_triplet(spec)?;
                    RagdParams64::strict(l, rho, epsilon).map_err(err)?
                }
                ModeSpec::Practical => practical_ragd(spec)?,
            };
            Ok(ResolvedMethod::Ragd { params })
        }
        "rhb" => {
            let params = match mode {
                ModeSpec::Strict => {
                    let (l, rho, epsilon) = strict_triplet(spec)?;
                    RhbParams64::strict(l, rho, epsilon).map_err(err)?
                }
                ModeSpec::Practical => practical_rhb(spec)?,
            };
            Ok(ResolvedMethod::Rhb { params })
        }
        "perturbed-ragd" => {
            let (l, rho, epsilon) = strict_triplet(spec)?;
            let zeta = spec.zeta.unwrap_or(0.1);
            let (params, perturb) =
                perturbed_params(l, rho, epsilon, problem.dim(), zeta, run_seed).map_err(err)?;
            Ok(ResolvedMethod::PerturbedRagd { params, perturb })
        }
        "ada-ragd" | "ada-rhb" => {
            let preset = match spec.preset.as_deref() {
                Some("paper-practical") => Some(PaperPractical::default()),
                Some(other) => {
                    return Err(format!("config error: unknown preset '{other}'"));
                }
                None => None,
            };
            let (base_eta, base_eps, base_rho, base_mult) = match &preset {
                Some(p) => (
                    spec.eta.unwrap_or(p.eta),
                    spec.epsilon.unwrap_or(p.epsilon),
                    spec.rho.unwrap_or(p.rho),
                    spec.theta_multiplier.unwrap_or(p.theta_multiplier),
                ),
                None => (
                    require(spec.eta, "eta", name).unwrap_or(f64::NAN),
                    spec.epsilon.unwrap_or(1e-4),
                    spec.rho.unwrap_or(1.0),
                    spec.theta_multiplier.unwrap_or(f64::NAN),
                ),
            };

            let gamma_default = if name == "ada-ragd" { 7.0 / 8.0 } else { 1.0 };
            let (b0, gamma, c1, c2) = match &preset {
                Some(p) => (
                    spec.b0.unwrap_or(p.b0),
                    spec.gamma.unwrap_or(p.gamma),
                    spec.c1.unwrap_or(p.c1),
                    spec.c2.unwrap_or(p.c2),
                ),
                None => (
                    spec.b0.unwrap_or(100.0),
                    spec.gamma.unwrap_or(gamma_default),
                    spec.c1.unwrap_or(10.0),
                    spec.c2.unwrap_or(2.0),
                ),
            };
            let c0 = if preset.is_some() || spec.c0_slope.is_some() {
                C0Schedule::Affine {
                    base: spec.c0.unwrap_or(1.0),
                    slope: spec.c0_slope.unwrap_or(0.001),
                }
            } else {
                C0Schedule::Constant(spec.c0.unwrap_or(2.0))
            };

            let ada_mode = match spec.adaptive {
                Some(AdaptiveModeSpec::KnownLipschitz) => AdaMode::KnownLipschitz,
                Some(AdaptiveModeSpec::UnknownLipschitz) => AdaMode::UnknownLipschitz,
                None => {
                    if preset.is_some() {
                        AdaMode::UnknownLipschitz
                    } else {
                        AdaMode::KnownLipschitz
                    }
                }
            };

            let mut ada = AdaptiveParams::new(b0, gamma, c0, c1).map_err(err)?;

            // Base parameters: strict derivations when asked for, the
            // multiplier form otherwise.
            if name == "ada-ragd" {
                let params = match mode {
                    ModeSpec::Strict => {
                        let (l, rho, epsilon) = strict_triplet(spec)?;
                        RagdParams64::strict(l, rho, epsilon).map_err(err)?
                    }
                    ModeSpec::Practical => {
                        if !base_mult.is_finite() || !base_eta.is_finite() {
                            return Err(format!(
                                "config error: method '{name}' needs 'eta' and 'theta_multiplier' (or the paper-practical preset)"
                            ));
                        }
                        RagdParams64::practical_multiplier(base_eta, base_mult, base_eps, base_rho)
                            .map_err(err)?
                    }
                };
                if ada_mode == AdaMode::UnknownLipschitz {
                    let eta_min = spec.eta_min.unwrap_or(params.eta / 2f64.powi(15));
                    let rho_max = spec
                        .rho_max
                        .unwrap_or(params.rho * (params.eta / eta_min).powi(2));
                    ada = ada
                        .with_unknown_lipschitz(c2, eta_min, rho_max)
                        .map_err(err)?;
                }
                Ok(ResolvedMethod::AdaRagd {
                    params,
                    ada,
                    mode: ada_mode,
                })
            } else {
                let params = match mode {
                    ModeSpec::Strict => {
                        let (l, rho, epsilon) = strict_triplet(spec)?;
                        RhbParams64::strict(l, rho, epsilon).map_err(err)?
                    }
                    ModeSpec::Practical => {
                        if !base_mult.is_finite() || !base_eta.is_finite() {
                            return Err(format!(
                                "config error: method '{name}' needs 'eta' and 'theta_multiplier' (or the paper-practical preset)"
                            ));
                        }
                        RhbParams64::practical_multiplier(base_eta, base_mult, base_eps, base_rho)
                            .map_err(err)?
                    }
                };
                if ada_mode == AdaMode::UnknownLipschitz {
                    let eta_min = spec.eta_min.unwrap_or(params.eta / 2f64.powi(15));
                    let rho_max = spec
                        .rho_max
                        .unwrap_or(params.rho * (params.eta / eta_min).powi(2));
                    ada = ada
                        .with_unknown_lipschitz(c2, eta_min, rho_max)
                        .map_err(err)?;
                }
                Ok(ResolvedMethod::AdaRhb {
                    params,
                    ada,
                    mode: ada_mode,
                })
            }
        }
        other => Err(format!("config error: unknown method '{other}'")),
    }
}

fn execute_one(
    built: &BuiltProblem,
    spec: &ProblemSpec,
    method: &MethodSpec,
    seed: u64,
    budget: u64,
) -> RunArtifact {
    let label = method.label();
    let mode = method.mode.unwrap_or_default();
    let start = Instant::now();
    let mut ragd_params = None;
    let mut rhb_params = None;
    let outcome = (|| -> Result<RunResult64, String> {
        let x_init = initial_point(built, spec, seed)?;
        let resolved = resolve_method(method, built.problem.as_ref(), seed)?;
        match &resolved {
            ResolvedMethod::Ragd { params }
            | ResolvedMethod::PerturbedRagd { params, .. }
            | ResolvedMethod::AdaRagd { params, .. } => ragd_params = Some(*params),
            ResolvedMethod::Rhb { params } | ResolvedMethod::AdaRhb { params, .. } => {
                rhb_params = Some(*params)
            }
            _ => {}
        }
        let opts = RunOptions::with_budget(budget);
        let problem = built.problem.as_ref();
        let map_run = |e: restartopt::Error| format!("{e}");
        match resolved {
            ResolvedMethod::Gd { eta } => {
                run_gd(problem, eta, &x_init, budget as usize, opts).map_err(map_run)
            }
            ResolvedMethod::HeuristicRagd { eta } => {
                run_heuristic_ragd(problem, eta, &x_init, budget as usize, opts).map_err(map_run)
            }
            ResolvedMethod::Nlcg { ls } => {
                run_nlcg(problem, ls, &x_init, budget as usize, opts).map_err(map_run)
            }
            ResolvedMethod::Ragd { params } => {
                run_ragd(problem, &params, &x_init, opts).map_err(map_run)
            }
            ResolvedMethod::PerturbedRagd { params, perturb } => {
                run_perturbed_ragd(problem, &params, &perturb, &x_init, opts).map_err(map_run)
            }
            ResolvedMethod::Rhb { params } => {
                run_rhb(problem, &params, &x_init, opts).map_err(map_run)
            }
            ResolvedMethod::AdaRagd { params, ada, mode } => {
                run_ada_ragd(problem, &params, &ada, mode, &x_init, opts).map_err(map_run)
            }
            ResolvedMethod::AdaRhb { params, ada, mode } => {
                run_ada_rhb(problem, &params, &ada, mode, &x_init, opts).map_err(map_run)
            }
        }
    })();
    let strict_constants = if mode == ModeSpec::Strict {
        let l = method.l.or(built.problem.lipschitz_gradient());
        let rho = method.rho.or(built.problem.lipschitz_hessian());
        match (l, rho, method.epsilon) {
            (Some(l), Some(rho), Some(eps)) => Some((l, rho, eps)),
            _ => None,
        }
    } else {
        None
    };
    RunArtifact {
        label,
        method_name: method.name.clone(),
        mode,
        seed,
        outcome,
        wall_time_s: start.elapsed().as_secs_f64(),
        strict_constants,
        ragd_params,
        rhb_params,
    }
}

fn thread_cap() -> usize {
    std::env::var("RESTARTOPT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Execute every (method, seed) pair and return the artifacts in config
/// order.
pub fn execute_config(cfg: &ExperimentConfig) -> Result<Vec<RunArtifact>, String> {
    let built = build_problem(&cfg.problem)?;
    let jobs: Vec<(usize, &MethodSpec, u64)> = cfg
        .methods
        .iter()
        .enumerate()
        .flat_map(|(mi, m)| cfg.seeds.iter().map(move |&s| (mi, m, s)))
        .collect();

    let queue: Mutex<VecDeque<(usize, &MethodSpec, u64)>> =
        Mutex::new(jobs.iter().copied().collect());
    let results: Mutex<Vec<(usize, u64, RunArtifact)>> = Mutex::new(Vec::with_capacity(jobs.len()));
    let workers = thread_cap().min(jobs.len()).max(1);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let job = queue.lock().expect("queue lock").pop_front();
                let Some((mi, method, seed)) = job else {
                    break;
                };
                let artifact = execute_one(&built, &cfg.problem, method, seed, cfg.budget);
                results.lock().expect("results lock").push((mi, seed, artifact));
            });
        }
    });

    let mut collected = results.into_inner().expect("results lock");
    collected.sort_by_key(|(mi, seed, _)| (*mi, *seed));
    Ok(collected.into_iter().map(|(_, _, a)| a).collect())
}

/// CSV schema: one row per iteration. `f` and `grad_norm` are diagnostics
/// (the objective column is instrumentation, not a charged evaluation);
/// `wall_time_s` holds the run's total wall time repeated on each row when
/// timings are enabled and stays empty otherwise so artifacts stay
/// byte-reproducible.
pub fn trace_csv(result: &RunResult64, wall_time_s: Option<f64>) -> String {
    let mut out =
        String::from("iter,epoch,f,grad_norm,grad_evals,fn_evals,replay_grad_evals,restarted,wall_time_s\n");
    let wall = wall_time_s.map(|w| w.to_string()).unwrap_or_default();
    for r in &result.trace {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.global_iter,
            r.epoch_index,
            r.f_value,
            r.grad_norm,
            r.grad_evals,
            r.fn_evals,
            r.replay_grad_evals,
            u8::from(r.restarted),
            wall,
        ));
    }
    out
}

pub fn csv_file_name(label: &str, seed: u64) -> String {
    let sanitized: String = label
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect();
    format!("{sanitized}_{seed}.csv")
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub method: String,
    pub seed: u64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminated: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_grad_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_evals: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fn_evals: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replay_grad_evals: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs_completed: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

pub fn summarize(artifact: &RunArtifact, timings: bool) -> RunSummary {
    match &artifact.outcome {
        Ok(result) => RunSummary {
            method: artifact.label.clone(),
            seed: artifact.seed,
            status: "ok".into(),
            terminated: Some(result.terminated),
            output_grad_norm: Some(result.output_grad_norm),
            final_f: result.trace.last().map(|r| r.f_value),
            grad_evals: Some(result.counters.grad_evals),
            fn_evals: Some(result.counters.fn_evals),
            replay_grad_evals: Some(result.counters.replay_grad_evals),
            epochs_completed: Some(result.epochs_completed),
            restarts: Some(result.restart_iters.len()),
            wall_time_s: timings.then_some(artifact.wall_time_s),
        },
        Err(message) => RunSummary {
            method: artifact.label.clone(),
            seed: artifact.seed,
            status: format!("error: {message}"),
            terminated: None,
            output_grad_norm: None,
            final_f: None,
            grad_evals: None,
            fn_evals: None,
            replay_grad_evals: None,
            epochs_completed: None,
            restarts: None,
            wall_time_s: timings.then_some(artifact.wall_time_s),
        },
    }
}

/// Write per-run CSVs plus `summary.json` under `out_dir`. Run errors are
/// recorded in the summary; the command still succeeds.
pub fn write_artifacts(
    cfg: &ExperimentConfig,
    artifacts: &[RunArtifact],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, String> {
    fs::create_dir_all(out_dir).map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let mut written = Vec::new();
    for artifact in artifacts {
        if let Ok(result) = &artifact.outcome {
            let name = csv_file_name(&artifact.label, artifact.seed);
            let path = out_dir.join(name);
            let wall = cfg.timings.then_some(artifact.wall_time_s);
            fs::write(&path, trace_csv(result, wall))
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            written.push(path);
        }
    }
    let summaries: Vec<RunSummary> = artifacts
        .iter()
        .map(|a| summarize(a, cfg.timings))
        .collect();
    let summary_path = out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&serde_json::json!({ "runs": summaries }))
        .map_err(|e| format!("summary serialization failed: {e}"))?;
    fs::write(&summary_path, json + "\n")
        .map_err(|e| format!("cannot write {}: {e}", summary_path.display()))?;
    written.push(summary_path);
    Ok(written)
}
