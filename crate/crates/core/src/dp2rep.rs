//! From a pure differentially private learner to a replicable weak learner.
//!
//! The private learner is run on a fixed dummy dataset with many independent
//! shared random strings. Any real sample is a group-neighbour of the dummy, so
//! with enough draws some candidate is as good as what the learner would have
//! produced on real data; a replicable agnostic learner then picks among the
//! candidates.

use std::collections::HashSet;

use crate::bits::BitVector;
use crate::data::{Dataset, LabeledExample, SampleOracle};
use crate::error::{check_unit_open, Error, Result};
use crate::hypothesis::Hypothesis;
use crate::rstat::{mean_sample_size, r_mean_from_sum};
use crate::seedstream::SeedStream;

/// A non-empty indexed list of hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteClass {
    hypotheses: Vec<Hypothesis>,
}

impl FiniteClass {
    pub fn new(hypotheses: Vec<Hypothesis>) -> Result<Self> {
        if hypotheses.is_empty() {
            return Err(Error::Parameter("empty hypothesis class".into()));
        }
        Ok(Self { hypotheses })
    }

    /// The all-zero function and the indicator of every point of `{0,1}^d`.
    pub fn point_functions(d: usize) -> Self {
        let mut hypotheses = vec![Hypothesis::AllZero];
        hypotheses.extend((0..(1u64 << d)).map(|j| Hypothesis::Point(BitVector::from_index(j, d))));
        Self { hypotheses }
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn get(&self, i: usize) -> &Hypothesis {
        &self.hypotheses[i]
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }
}

/// A learner satisfying pure `ε`-differential privacy.
pub trait PureDpLearner: Send + Sync {
    fn epsilon(&self) -> f64;
    fn learn(&self, class: &FiniteClass, sample: &Dataset, stream: &mut SeedStream) -> Result<Hypothesis>;
}

/// Samples `h` with probability proportional to `exp(−ε·mistakes_S(h)/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialMechanism {
    pub epsilon: f64,
}

impl ExponentialMechanism {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Parameter(format!("privacy parameter {epsilon} must be non-negative")));
        }
        Ok(Self { epsilon })
    }

    /// Natural-log output probabilities, exactly normalized in log space.
    pub fn log_probabilities(&self, class: &FiniteClass, sample: &Dataset) -> Vec<f64> {
        let scores: Vec<f64> = class
            .hypotheses
            .iter()
            .map(|h| -self.epsilon * sample.mistakes(h) as f64 / 2.0)
            .collect();
        let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_z = top + scores.iter().map(|s| (s - top).exp()).sum::<f64>().ln();
        scores.iter().map(|s| s - log_z).collect()
    }

    pub fn probabilities(&self, class: &FiniteClass, sample: &Dataset) -> Vec<f64> {
        self.log_probabilities(class, sample).into_iter().map(f64::exp).collect()
    }
}

impl PureDpLearner for ExponentialMechanism {
    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn learn(&self, class: &FiniteClass, sample: &Dataset, stream: &mut SeedStream) -> Result<Hypothesis> {
        let probs = self.probabilities(class, sample);
        let u = stream.uniform_unit();
        let mut acc = 0.0;
        for (h, p) in class.hypotheses.iter().zip(&probs) {
            acc += p;
            if u < acc {
                return Ok(h.clone());
            }
        }
        Ok(class.hypotheses.last().expect("non-empty class").clone())
    }
}

pub fn exp_mech_learner(
    class: &FiniteClass,
    sample: &Dataset,
    epsilon: f64,
    stream: &mut SeedStream,
) -> Result<Hypothesis> {
    ExponentialMechanism::new(epsilon)?.learn(class, sample, stream)
}

fn agnostic_raw_accuracy(class_size: usize, alpha: f64, rho: f64) -> f64 {
    (alpha / 4.0) * (rho / class_size as f64) / 4.0
}

/// Samples [`r_finite_class_agnostic`] needs for a class of `class_size`.
pub fn agnostic_sample_size(class_size: usize, alpha: f64, beta: f64, rho: f64) -> u128 {
    mean_sample_size(
        1.0,
        agnostic_raw_accuracy(class_size, alpha, rho),
        beta / class_size as f64,
    )
}

/// Replicable agnostic learner from a given sample.
pub fn r_finite_class_agnostic_from(
    class: &FiniteClass,
    samples: &Dataset,
    alpha: f64,
    beta: f64,
    rho: f64,
    stream: &SeedStream,
) -> Result<Hypothesis> {
    check_unit_open("alpha", alpha)?;
    check_unit_open("beta", beta)?;
    check_unit_open("rho", rho)?;
    let size = class.len();
    let needed = agnostic_sample_size(size, alpha, beta, rho);
    let n = samples.total();
    if n < needed {
        return Err(Error::Parameter(format!(
            "{n} samples below the required {needed} for a class of {size}"
        )));
    }
    let raw = agnostic_raw_accuracy(size, alpha, rho);
    let mut best: Option<(usize, f64)> = None;
    for (i, h) in class.hypotheses.iter().enumerate() {
        let err = r_mean_from_sum(
            samples.mistakes(h) as f64,
            n,
            (0.0, 1.0),
            raw,
            rho / size as f64,
            beta / size as f64,
            &stream.derive(&format!("h-{i}")),
        )?;
        if best.is_none_or(|(_, b)| err < b) {
            best = Some((i, err));
        }
    }
    Ok(class.hypotheses[best.expect("non-empty class").0].clone())
}

/// Replicable agnostic learner for a finite class: estimates every error by
/// replicable rounding and returns the first minimizer.
pub fn r_finite_class_agnostic(
    class: &FiniteClass,
    source: &mut dyn SampleOracle,
    alpha: f64,
    beta: f64,
    rho: f64,
    shared: &SeedStream,
    data: &mut SeedStream,
) -> Result<Hypothesis> {
    check_unit_open("alpha", alpha)?;
    check_unit_open("beta", beta)?;
    check_unit_open("rho", rho)?;
    let samples = source.draw_many(agnostic_sample_size(class.len(), alpha, beta, rho), data)?;
    r_finite_class_agnostic_from(class, &samples, alpha, beta, rho, shared)
}

/// Dummy dataset size used when the caller supplies none:
/// `⌈(8/ε)(ln|C| + ln 4)⌉` at `ε = 1/10`.
pub fn default_dummy_size(class_size: usize) -> usize {
    (80.0 * ((class_size as f64).ln() + 4f64.ln())).ceil() as usize
}

/// Candidate strings drawn for a dummy dataset of size `m0`: `⌈2·e^{m0/10}·ln(3/β′)⌉`.
pub fn candidate_count(m0: usize, beta: f64) -> f64 {
    (2.0 * (0.1 * m0 as f64).exp() * (3.0 / beta).ln()).ceil()
}

/// `m0` copies of the all-zero input labeled 0.
pub fn dummy_dataset(d: usize, m0: usize) -> Dataset {
    Dataset::from_counts(d, [(LabeledExample::new(BitVector::zeros(d), false), m0 as u128)])
        .expect("dimension matches")
}

/// Parameters of [`dp_to_replicable_weak`] beyond the learning budgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakLearnerConfig {
    /// Dummy dataset size; `None` uses [`default_dummy_size`].
    pub m0: Option<usize>,
    /// Largest candidate count allowed before reporting a blowup.
    pub max_candidates: u64,
}

impl Default for WeakLearnerConfig {
    fn default() -> Self {
        Self {
            m0: None,
            max_candidates: 1_000_000,
        }
    }
}

/// The candidate class `{A(S̄; r_i)}`, deduplicated in draw order.
pub fn candidate_class(
    dp: &dyn PureDpLearner,
    class: &FiniteClass,
    d: usize,
    beta: f64,
    config: WeakLearnerConfig,
    shared: &SeedStream,
) -> Result<FiniteClass> {
    let m0 = config.m0.unwrap_or_else(|| default_dummy_size(class.len()));
    let n = candidate_count(m0, beta);
    if n.is_nan() || n > config.max_candidates as f64 {
        return Err(Error::RepresentationBlowup {
            needed: n,
            cap: config.max_candidates,
        });
    }
    let dummy = dummy_dataset(d, m0);
    let root = shared.derive("candidates");
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for i in 0..n as u64 {
        let h = dp.learn(class, &dummy, &mut root.derive(&format!("r-{i}")))?;
        if seen.insert(h.canonical()) {
            out.push(h);
        }
    }
    FiniteClass::new(out)
}

/// Replicable weak learner with error at most 3/8 with probability `1 − β′`.
#[allow(clippy::too_many_arguments)]
pub fn dp_to_replicable_weak(
    dp: &dyn PureDpLearner,
    class: &FiniteClass,
    source: &mut dyn SampleOracle,
    rho: f64,
    beta: f64,
    config: WeakLearnerConfig,
    shared: &SeedStream,
    data: &mut SeedStream,
) -> Result<Hypothesis> {
    check_unit_open("rho", rho)?;
    check_unit_open("beta", beta)?;
    let candidates = candidate_class(dp, class, source.dim(), beta, config, shared)?;
    r_finite_class_agnostic(
        &candidates,
        source,
        1.0 / 8.0,
        beta / 3.0,
        rho,
        &shared.derive("agnostic"),
        data,
    )
}
