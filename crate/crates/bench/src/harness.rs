//! Seeded trial pairs estimating the probability that two executions with the
//! same shared randomness disagree.

use rayon::prelude::*;
use serde::Serialize;

use replicable::SeedStream;

use crate::stats::{wilson, WilsonInterval, Z95};

/// One execution of a learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Canonical serialization of the output, or the learner's error message.
    pub output: Result<String, String>,
    /// Accuracy metric of the output, when it has one.
    pub error: Option<f64>,
}

impl Outcome {
    pub fn ok(output: impl Into<String>, error: Option<f64>) -> Self {
        Self {
            output: Ok(output.into()),
            error,
        }
    }

    pub fn failed(message: impl ToString) -> Self {
        Self {
            output: Err(message.to_string()),
            error: None,
        }
    }
}

/// A learner run against its data source.
pub trait Experiment: Sync {
    fn run_once(&self, shared: &SeedStream, data: &mut SeedStream) -> Outcome;
}

impl<F> Experiment for F
where
    F: Fn(&SeedStream, &mut SeedStream) -> Outcome + Sync,
{
    fn run_once(&self, shared: &SeedStream, data: &mut SeedStream) -> Outcome {
        self(shared, data)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed_label: String,
    pub a: Outcome,
    pub b: Outcome,
}

impl TrialRecord {
    /// Both executions succeeded with byte-identical outputs.
    pub fn equal(&self) -> bool {
        matches!((&self.a.output, &self.b.output), (Ok(x), Ok(y)) if x == y)
    }

    pub fn failures(&self) -> u64 {
        self.a.output.is_err() as u64 + self.b.output.is_err() as u64
    }
}

/// Accuracy over all `2T` executions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracySummary {
    pub threshold: f64,
    /// Executions whose error is at most `threshold`; failures never count.
    pub within: u64,
    pub executions: u64,
    pub fraction_within: f64,
    pub mean_error: Option<f64>,
    pub max_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicabilityReport {
    pub experiment: String,
    pub root_seed: u64,
    pub trials: u64,
    pub disagreements: u64,
    pub rho_hat: f64,
    pub wilson: WilsonInterval,
    /// Trial pairs with at least one failed execution; each is also a disagreement.
    pub failed_pairs: u64,
    pub failed_executions: u64,
    pub accuracy: AccuracySummary,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl ReplicabilityReport {
    /// Whether `ρ̂ ≤ rho + 3·half-width`.
    pub fn certifies(&self, rho: f64) -> bool {
        self.rho_hat <= rho + 3.0 * self.wilson.half_width
    }

    pub fn failure_rate(&self) -> f64 {
        self.failed_executions as f64 / (2 * self.trials) as f64
    }
}

/// Streams of trial `t`: the shared stream and the two data streams.
pub fn trial_streams(root_seed: u64, t: u64) -> (String, SeedStream, SeedStream, SeedStream) {
    let label = format!("trial-{t}");
    let shared = SeedStream::new(root_seed).derive(&label);
    let data = SeedStream::data(root_seed).derive(&label);
    (label, shared, data.derive("a"), data.derive("b"))
}

pub fn run_trial(exp: &dyn Experiment, root_seed: u64, t: u64) -> TrialRecord {
    let (seed_label, shared, mut data_a, mut data_b) = trial_streams(root_seed, t);
    let a = exp.run_once(&shared, &mut data_a);
    let b = exp.run_once(&shared, &mut data_b);
    TrialRecord { trial: t, seed_label, a, b }
}

/// Runs `trials` pairs on `threads` workers; results do not depend on scheduling.
pub fn estimate_replicability(
    name: &str,
    exp: &dyn Experiment,
    root_seed: u64,
    trials: u64,
    threads: usize,
    accuracy_threshold: f64,
) -> ReplicabilityReport {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool");
    let records: Vec<TrialRecord> = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| run_trial(exp, root_seed, t))
            .collect()
    });
    summarize(name, root_seed, records, accuracy_threshold)
}

pub fn summarize(name: &str, root_seed: u64, records: Vec<TrialRecord>, accuracy_threshold: f64) -> ReplicabilityReport {
    let trials = records.len() as u64;
    let disagreements = records.iter().filter(|r| !r.equal()).count() as u64;
    let failed_pairs = records.iter().filter(|r| r.failures() > 0).count() as u64;
    let failed_executions = records.iter().map(TrialRecord::failures).sum();
    let errors: Vec<f64> = records
        .iter()
        .flat_map(|r| [&r.a, &r.b])
        .filter(|o| o.output.is_ok())
        .filter_map(|o| o.error)
        .collect();
    let within = errors.iter().filter(|&&e| e <= accuracy_threshold).count() as u64;
    let accuracy = AccuracySummary {
        threshold: accuracy_threshold,
        within,
        executions: 2 * trials,
        fraction_within: within as f64 / (2 * trials).max(1) as f64,
        mean_error: (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64),
        max_error: errors.iter().cloned().reduce(f64::max),
    };
    ReplicabilityReport {
        experiment: name.to_string(),
        root_seed,
        trials,
        disagreements,
        rho_hat: disagreements as f64 / trials.max(1) as f64,
        wilson: wilson(disagreements, trials.max(1), Z95),
        failed_pairs,
        failed_executions,
        accuracy,
        records,
    }
}
