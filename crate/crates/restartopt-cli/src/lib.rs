//! Library side of the benchmark harness: configuration, run orchestration,
//! trace export, comparison tables, and audit wiring. The binary in
//! `main.rs` is a thin argument-parsing layer over these functions.

pub mod audit;
pub mod compare;
pub mod config;
pub mod runner;

pub use audit::{audit_config, gradcheck_problem};
pub use compare::{build_compare, CompareTable};
pub use config::{ExperimentConfig, MethodSpec, ModeSpec, ProblemSpec};
pub use runner::{execute_config, write_artifacts, RunArtifact};
