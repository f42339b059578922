use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use restartopt::problems::generate_synthetic_mc;
use restartopt_cli::{audit, compare, config::ExperimentConfig, runner};

#[derive(Parser)]
#[command(
    name = "restartopt",
    about = "Benchmark harness for restarted first-order methods",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Path to the JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Replace the configured seed list with a single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured iteration budget.
    #[arg(long)]
    budget: Option<u64>,
    /// Force strict mode on every method.
    #[arg(long, conflicts_with = "practical")]
    strict: bool,
    /// Force practical mode on every method.
    #[arg(long)]
    practical: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every (method, seed) pair and write traces plus a summary.
    Run {
        #[command(flatten)]
        common: ConfigArgs,
        /// Output directory (overrides the config's out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run the verification monitors after the runs and report.
        #[arg(long)]
        audit: bool,
        /// Record wall-clock time in the artifacts (breaks byte
        /// reproducibility of the summary).
        #[arg(long)]
        timings: bool,
    },
    /// Align all methods on a shared evaluation axis and emit one CSV.
    Compare {
        #[command(flatten)]
        common: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the configured problem's gradient against finite differences.
    Gradcheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a synthetic low-rank observation file in COO text form.
    Synth {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        density: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run a configuration deterministically and verify the monitors.
    Audit {
        #[command(flatten)]
        common: ConfigArgs,
    },
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, String> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(budget) = args.budget {
        cfg.budget = budget;
    }
    if args.strict {
        for m in &mut cfg.methods {
            m.mode = Some(restartopt_cli::ModeSpec::Strict);
        }
    }
    if args.practical {
        for m in &mut cfg.methods {
            m.mode = Some(restartopt_cli::ModeSpec::Practical);
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(message) => {
            eprintln!("{message}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<ExitCode, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            common,
            out,
            audit: run_audit,
            timings,
        } => {
            let mut cfg = load_config(&common)?;
            cfg.timings |= timings;
            let out_dir = out
                .or_else(|| cfg.out_dir.clone().map(PathBuf::from))
                .ok_or("config error: an output directory is required (set out_dir or --out)")?;
            let artifacts = runner::execute_config(&cfg)?;
            let written = runner::write_artifacts(&cfg, &artifacts, &out_dir)?;
            for path in &written {
                println!("wrote {}", path.display());
            }
            let failures = artifacts.iter().filter(|a| a.outcome.is_err()).count();
            if failures > 0 {
                println!("{failures} run(s) failed; details in summary.json");
            }
            if run_audit {
                let (report, clean) = audit::audit_config(&cfg)?;
                print!("{report}");
                if !clean {
                    println!("audit: VIOLATIONS FOUND");
                    return Ok(ExitCode::FAILURE);
                }
                println!("audit: clean");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { common, out } => {
            let cfg = load_config(&common)?;
            if cfg.methods.len() < 2 {
                return Err("config error: compare needs at least two methods".into());
            }
            let mut single = cfg.clone();
            single.seeds = vec![cfg.seeds[0]];
            let artifacts = runner::execute_config(&single)?;
            let refs: Vec<&runner::RunArtifact> = artifacts.iter().collect();
            let table = compare::build_compare(&refs)?;
            let csv = table.to_csv();
            match out.or_else(|| cfg.out_dir.clone().map(PathBuf::from)) {
                Some(dir) => {
                    fs::create_dir_all(&dir)
                        .map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
                    let path = dir.join("compare.csv");
                    fs::write(&path, csv)
                        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
                    println!("wrote {}", path.display());
                }
                None => print!("{csv}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Gradcheck { config, seed } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| format!("cannot read {}: {e}", config.display()))?;
            let cfg = ExperimentConfig::from_json(&text)?;
            let (report, pass) = audit::gradcheck_problem(&cfg.problem, seed)?;
            print!("{report}");
            if pass {
                println!("gradcheck: pass");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("gradcheck: FAIL");
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Synth {
            rows,
            cols,
            rank,
            density,
            noise,
            seed,
            out,
        } => {
            let obs = generate_synthetic_mc::<f64>(rows, cols, rank, density, noise, seed)
                .map_err(|e| format!("synth error: {e}"))?;
            let mut buffer = Vec::new();
            obs.write_coo(&mut buffer)
                .map_err(|e| format!("synth error: {e}"))?;
            fs::write(&out, buffer).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
            println!("wrote {} ({} observations)", out.display(), obs.n_observed());
            Ok(ExitCode::SUCCESS)
        }
        Command::Audit { common } => {
            let cfg = load_config(&common)?;
            let (report, clean) = audit::audit_config(&cfg)?;
            print!("{report}");
            if clean {
                println!("audit: clean");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("audit: VIOLATIONS FOUND");
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
