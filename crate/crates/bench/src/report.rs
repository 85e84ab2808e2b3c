//! Running a config and writing `report.json` and `trials.csv`.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::BenchError;
use crate::experiments::ConfiguredExperiment;
use crate::harness::{estimate_replicability, Outcome, ReplicabilityReport};

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    /// The effective config, without its output directory.
    pub config: ExperimentConfig,
    /// Whether `ρ̂` is within three Wilson half-widths of the configured `ρ`.
    pub certified: bool,
    pub summary: ReplicabilityReport,
}

/// Runs every trial pair of `config`, writing outputs when `config.out` is set.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<RunReport, BenchError> {
    let exp = ConfiguredExperiment::new(config.clone())?;
    let summary = estimate_replicability(
        &config.experiment,
        &exp,
        config.seed,
        config.trials,
        threads,
        config.threshold(),
    );
    let report = RunReport {
        config: ExperimentConfig {
            out: None,
            ..config.clone()
        },
        certified: summary.certifies(config.rho),
        summary,
    };
    if let Some(dir) = &config.out {
        write_outputs(&report, dir)?;
    }
    Ok(report)
}

pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(dir.join("report.json"), json)?;
    let mut csv = csv::Writer::from_path(dir.join("trials.csv"))?;
    csv.write_record(["trial", "seed_label", "output_a", "output_b", "equal", "err_a", "err_b"])?;
    let output = |o: &Outcome| match &o.output {
        Ok(s) => s.clone(),
        Err(e) => format!("ERROR: {e}"),
    };
    let err = |o: &Outcome| o.error.map(|e| format!("{e:?}")).unwrap_or_default();
    for r in &report.summary.records {
        csv.write_record([
            r.trial.to_string(),
            r.seed_label.clone(),
            output(&r.a),
            output(&r.b),
            r.equal().to_string(),
            err(&r.a),
            err(&r.b),
        ])?;
    }
    csv.flush()?;
    Ok(())
}
