//! Experiment orchestration: configs, training runs, evaluation and artifacts.

pub mod compare;
pub mod config;
pub mod run;

pub use compare::{compare_runs, ComparisonOutput};
pub use config::{Algorithm, ExperimentConfig};
pub use run::{eval_unseen, execute, run_experiment, run_seed, RunArtifact, RunResult};
