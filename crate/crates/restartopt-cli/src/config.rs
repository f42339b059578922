//! Experiment configuration: problem, method list, budget, seeds, output.

use serde::Deserialize;

fn default_budget() -> u64 {
    1000
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

/// Top-level experiment description, read from a JSON file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub methods: Vec<MethodSpec>,
    /// Iteration budget: fixed iteration count for the baselines, total
    /// iteration cap for the restarted methods.
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub out_dir: Option<String>,
    /// Record wall-clock time. Off by default so artifacts are
    /// byte-reproducible.
    #[serde(default)]
    pub timings: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Cosine {
        dim: usize,
        #[serde(default)]
        init: Option<InitSpec>,
    },
    /// Cosine testbed with one gradient coordinate negated; exists so the
    /// gradient checker's failure path can be exercised end to end.
    CorruptedCosine {
        dim: usize,
        #[serde(default)]
        coordinate: usize,
        #[serde(default)]
        init: Option<InitSpec>,
    },
    DiagQuadratic {
        lambdas: Vec<f64>,
        #[serde(default)]
        init: Option<InitSpec>,
    },
    SyntheticMc {
        rows: usize,
        cols: usize,
        rank: usize,
        density: f64,
        #[serde(default)]
        noise: f64,
        data_seed: u64,
        #[serde(default)]
        init: Option<InitSpec>,
    },
    SyntheticOneBit {
        rows: usize,
        cols: usize,
        rank: usize,
        density: f64,
        data_seed: u64,
        #[serde(default)]
        init: Option<InitSpec>,
    },
    MatrixCompletion {
        path: String,
        format: DataFormat,
        rank: usize,
        #[serde(default)]
        init: Option<InitSpec>,
    },
    OneBit {
        path: String,
        format: DataFormat,
        rank: usize,
        #[serde(default)]
        init: Option<InitSpec>,
    },
}

impl ProblemSpec {
    pub fn init_spec(&self) -> Option<&InitSpec> {
        match self {
            ProblemSpec::Cosine { init, .. }
            | ProblemSpec::CorruptedCosine { init, .. }
            | ProblemSpec::DiagQuadratic { init, .. }
            | ProblemSpec::SyntheticMc { init, .. }
            | ProblemSpec::SyntheticOneBit { init, .. }
            | ProblemSpec::MatrixCompletion { init, .. }
            | ProblemSpec::OneBit { init, .. } => init.as_ref(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    /// `i j value` triplets, 0-based.
    Coo,
    /// `user,item,rating[,timestamp]` lines, 1-based.
    Ratings,
}

/// How the starting point is drawn for each run seed.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    Zeros,
    Uniform { low: f64, high: f64 },
    Gaussian { scale: f64 },
    /// Truncated-SVD factors of the observed matrix (completion problems).
    Svd,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    Strict,
    #[default]
    Practical,
}

/// One method entry. Unused fields for a given method name are rejected at
/// build time, not silently ignored.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub name: String,
    /// Column/file label; defaults to the method name.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub mode: Option<ModeSpec>,
    /// `paper-practical` fills the experiment-section defaults for the
    /// adaptive methods.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub l: Option<f64>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub theta_multiplier: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub b0: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub c0: Option<f64>,
    #[serde(default)]
    pub c0_slope: Option<f64>,
    #[serde(default)]
    pub c1: Option<f64>,
    #[serde(default)]
    pub c2: Option<f64>,
    #[serde(default)]
    pub eta_min: Option<f64>,
    #[serde(default)]
    pub rho_max: Option<f64>,
    #[serde(default)]
    pub zeta: Option<f64>,
    #[serde(default)]
    pub adaptive: Option<AdaptiveModeSpec>,
}

impl MethodSpec {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.name.clone())
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum AdaptiveModeSpec {
    KnownLipschitz,
    UnknownLipschitz,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| format!("config parse error: {e}"))?;
        if cfg.methods.is_empty() {
            return Err("config error: at least one method is required".into());
        }
        if cfg.seeds.is_empty() {
            return Err("config error: at least one seed is required".into());
        }
        let known = [
            "gd",
            "ragd",
            "ada-ragd",
            "perturbed-ragd",
            "rhb",
            "ada-rhb",
            "heuristic-ragd",
            "nlcg",
        ];
        for m in &cfg.methods {
            if !known.contains(&m.name.as_str()) {
                return Err(format!(
                    "config error: unknown method '{}' (expected one of {})",
                    m.name,
                    known.join(", ")
                ));
            }
        }
        Ok(cfg)
    }
}
