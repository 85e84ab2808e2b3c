//! Monte Carlo replicability estimates for the learners in `replicable`.
//!
//! An experiment is run on `T` trial pairs. Both executions of a pair share one
//! stream of internal randomness and draw independent samples; the fraction of
//! pairs whose outputs differ estimates the replicability parameter `ρ`.

pub mod accuracy;
pub mod config;
pub mod error;
pub mod experiments;
pub mod harness;
pub mod report;
pub mod stats;

pub use config::{preset, ExperimentConfig, PRESETS};
pub use error::BenchError;
pub use experiments::ConfiguredExperiment;
pub use harness::{estimate_replicability, Experiment, Outcome, ReplicabilityReport};
pub use report::{run_experiment, RunReport};
