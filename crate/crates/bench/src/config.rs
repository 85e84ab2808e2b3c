//! Experiment configuration files.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use replicable::dtdist::DecisionTreeDistribution;
use replicable::ows::index_width;

use crate::error::BenchError;

/// Smallest number of trial pairs a report is computed from.
pub const MIN_TRIALS: u64 = 30;

/// Largest cube dimension accepted for enumerable distributions.
pub const MAX_CUBE_DIM: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub distribution: DistributionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    pub learner: LearnerSpec,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    /// Sample size for learners that take one; others draw what they need.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    pub trials: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Error counted as accurate; defaults per learner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistributionSpec {
    /// One bit `x0 ∼ Bernoulli(p)`; the learner estimates its mean.
    Bernoulli { p: f64 },
    /// Uniform over `1..=support`, values stored in binary.
    UniformRange { support: u64 },
    Uniform { d: usize },
    Product { p: Vec<f64> },
    /// Uniform on the first `d − 1` coordinates, `Pr[x_d = 1] = (1/2)^{1/n}`.
    HardInstance { d: usize, n: u64 },
    /// A decision-tree distribution in its serialized form.
    Tree { d: usize, tree: String },
    /// Uniform over the chain points of a one-way sequence, labeled by the concept.
    OwsChain {
        d: usize,
        seed_index: u64,
        #[serde(default)]
        positives_only: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetSpec {
    AllZero,
    /// `x ↦ b + w·x` with `w` given as an integer whose bit `i` is coordinate `i`.
    AffineParity { w: u64, b: bool },
    Point { index: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorSpec {
    #[default]
    Monotone,
    Subcube,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniformLearnerSpec {
    #[default]
    AffParity,
    TruthTable,
}

fn default_max_candidates() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LearnerSpec {
    RMean,
    RQuantile {
        q: f64,
    },
    RAffParity,
    /// Gaussian elimination guessing free variables, by default from
    /// per-execution randomness.
    NaiveGaussian {
        #[serde(default)]
        shared_guesses: bool,
    },
    ROws,
    RBuildDt {
        depth: usize,
        #[serde(default)]
        estimator: EstimatorSpec,
    },
    Lift {
        depth: usize,
        #[serde(default)]
        estimator: EstimatorSpec,
        #[serde(default)]
        uniform_learner: UniformLearnerSpec,
    },
    Dp2rep {
        epsilon: f64,
        #[serde(default)]
        m0: Option<usize>,
        #[serde(default = "default_max_candidates")]
        max_candidates: u64,
    },
    /// Always outputs the all-false constant.
    Constant,
    /// Outputs a constant chosen by a fresh per-execution coin.
    Coin,
}

impl LearnerSpec {
    pub fn takes_sample_size(&self) -> bool {
        matches!(
            self,
            LearnerSpec::RMean | LearnerSpec::RQuantile { .. } | LearnerSpec::NaiveGaussian { .. } | LearnerSpec::ROws
        )
    }
}

impl DistributionSpec {
    /// Dimension of the labeled examples.
    pub fn dim(&self) -> usize {
        match self {
            DistributionSpec::Bernoulli { .. } => 1,
            DistributionSpec::UniformRange { support } => range_bits(*support),
            DistributionSpec::Uniform { d }
            | DistributionSpec::HardInstance { d, .. }
            | DistributionSpec::Tree { d, .. }
            | DistributionSpec::OwsChain { d, .. } => *d,
            DistributionSpec::Product { p } => p.len(),
        }
    }

    /// Whether examples are points of `{0,1}^d` labeled by a target concept.
    fn is_cube(&self) -> bool {
        matches!(
            self,
            DistributionSpec::Uniform { .. }
                | DistributionSpec::Product { .. }
                | DistributionSpec::HardInstance { .. }
                | DistributionSpec::Tree { .. }
        )
    }
}

/// Bits used to store a value of `1..=support`.
pub fn range_bits(support: u64) -> usize {
    (64 - support.saturating_sub(1).leading_zeros() as usize).max(1)
}

fn fail(path: &str, message: impl Into<String>) -> BenchError {
    BenchError::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

fn unit_open(path: &str, v: f64) -> Result<(), BenchError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(fail(path, format!("{v} is not in (0, 1)")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| fail("$", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.experiment.trim().is_empty() {
            return Err(fail("experiment", "must be a non-empty name"));
        }
        unit_open("alpha", self.alpha)?;
        unit_open("beta", self.beta)?;
        unit_open("rho", self.rho)?;
        if self.trials < MIN_TRIALS {
            return Err(fail("trials", format!("{} is below the minimum of {MIN_TRIALS}", self.trials)));
        }
        if let Some(t) = self.accuracy_threshold {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(fail("accuracy_threshold", format!("{t} must be a non-negative number")));
            }
        }
        self.validate_distribution()?;
        self.validate_target()?;
        self.validate_learner()
    }

    fn validate_distribution(&self) -> Result<(), BenchError> {
        let check_cube = |d: usize| {
            if d == 0 || d > MAX_CUBE_DIM {
                Err(fail("distribution.d", format!("{d} is outside 1..={MAX_CUBE_DIM}")))
            } else {
                Ok(())
            }
        };
        match &self.distribution {
            DistributionSpec::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(fail("distribution.p", format!("{p} is not a probability")));
                }
            }
            DistributionSpec::UniformRange { support } => {
                if *support == 0 || *support > 1 << MAX_CUBE_DIM {
                    return Err(fail("distribution.support", format!("{support} is outside 1..=2^{MAX_CUBE_DIM}")));
                }
            }
            DistributionSpec::Uniform { d } => check_cube(*d)?,
            DistributionSpec::Product { p } => {
                if p.is_empty() || p.len() > MAX_CUBE_DIM {
                    return Err(fail("distribution.p", format!("needs 1..={MAX_CUBE_DIM} coordinates")));
                }
                if let Some(i) = p.iter().position(|v| !(0.0..=1.0).contains(v)) {
                    return Err(fail(&format!("distribution.p[{i}]"), format!("{} is not a probability", p[i])));
                }
            }
            DistributionSpec::HardInstance { d, n } => {
                check_cube(*d)?;
                if *n == 0 {
                    return Err(fail("distribution.n", "must be positive"));
                }
            }
            DistributionSpec::Tree { d, tree } => {
                check_cube(*d)?;
                let t = DecisionTreeDistribution::parse(*d, tree).map_err(|e| fail("distribution.tree", e.to_string()))?;
                if !t.is_normalized() {
                    return Err(fail("distribution.tree", format!("total mass {} is not 1", t.total_mass())));
                }
            }
            DistributionSpec::OwsChain { d, seed_index, .. } => {
                if *d < 9 {
                    return Err(fail("distribution.d", format!("{d} is below 9")));
                }
                let k = index_width(*d);
                if k > 20 {
                    return Err(fail("distribution.d", format!("index width {k} is above 20")));
                }
                if *seed_index >= 1 << k {
                    return Err(fail("distribution.seed_index", format!("{seed_index} does not fit in {k} bits")));
                }
            }
        }
        Ok(())
    }

    fn validate_target(&self) -> Result<(), BenchError> {
        let d = self.distribution.dim();
        match (&self.target, self.distribution.is_cube()) {
            (None, true) => Err(fail("target", "required for this distribution")),
            (Some(_), false) => Err(fail("target", "this distribution carries its own labels")),
            (Some(TargetSpec::AffineParity { w, .. }), true) if *w >= 1 << d => {
                Err(fail("target.w", format!("{w} does not fit in {d} bits")))
            }
            (Some(TargetSpec::Point { index }), true) if *index >= 1 << d => {
                Err(fail("target.index", format!("{index} does not fit in {d} bits")))
            }
            _ => Ok(()),
        }
    }

    fn validate_learner(&self) -> Result<(), BenchError> {
        let dist = &self.distribution;
        let needs = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(fail("learner.kind", format!("this learner needs {what}")))
            }
        };
        match &self.learner {
            LearnerSpec::RMean => needs(matches!(dist, DistributionSpec::Bernoulli { .. }), "a bernoulli distribution")?,
            LearnerSpec::RQuantile { q } => {
                needs(matches!(dist, DistributionSpec::UniformRange { .. }), "a uniform-range distribution")?;
                if !(0.0..=1.0).contains(q) {
                    return Err(fail("learner.q", format!("{q} is outside [0, 1]")));
                }
            }
            LearnerSpec::ROws => needs(matches!(dist, DistributionSpec::OwsChain { .. }), "an ows-chain distribution")?,
            LearnerSpec::RAffParity | LearnerSpec::NaiveGaussian { .. } => needs(dist.is_cube(), "a cube distribution")?,
            LearnerSpec::RBuildDt { .. } | LearnerSpec::Lift { .. } => {
                needs(dist.is_cube(), "a cube distribution")?;
                if self.beta >= self.rho / 3.0 {
                    return Err(fail("beta", format!("{} must be below rho/3", self.beta)));
                }
            }
            LearnerSpec::Dp2rep { epsilon, max_candidates, .. } => {
                needs(dist.is_cube() && dist.dim() <= 10, "a cube distribution of dimension at most 10")?;
                if !(*epsilon >= 0.0 && epsilon.is_finite()) {
                    return Err(fail("learner.epsilon", format!("{epsilon} must be non-negative")));
                }
                if *max_candidates == 0 {
                    return Err(fail("learner.max_candidates", "must be positive"));
                }
            }
            LearnerSpec::Constant | LearnerSpec::Coin => {}
        }
        match (self.n, self.learner.takes_sample_size()) {
            (Some(_), false) => Err(fail("n", "this learner draws its own samples")),
            (None, _) if matches!(self.learner, LearnerSpec::NaiveGaussian { .. }) => {
                Err(fail("n", "required by naive-gaussian"))
            }
            (Some(0), true) => Err(fail("n", "must be positive")),
            _ => Ok(()),
        }
    }

    /// Error counted as accurate when the config gives none.
    pub fn threshold(&self) -> f64 {
        self.accuracy_threshold.unwrap_or(match self.learner {
            LearnerSpec::RMean => 4.0 * self.alpha / self.rho,
            LearnerSpec::Dp2rep { .. } => 3.0 / 8.0,
            _ => self.alpha,
        })
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 10] = [
    "r-mean",
    "r-quantile",
    "aff-parity",
    "ge-nonreplicable",
    "ows-learn",
    "build-dt",
    "parity-lift",
    "dp2rep-weak",
    "coin",
    "constant",
];

/// A monotone depth-2 tree over `{0,1}^6`.
pub const BUILD_DT_TREE: &str = "(x0 (x1 [p=0.4] [p=0.8]) (x2 [p=1] [p=1.8]))";

/// The named experiments with their default parameters.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let base = |experiment: &str, distribution, target, learner, alpha, beta, rho, trials| ExperimentConfig {
        experiment: experiment.to_string(),
        distribution,
        target,
        learner,
        alpha,
        beta,
        rho,
        n: None,
        trials,
        seed: 2024,
        out: None,
        accuracy_threshold: None,
    };
    let config = match name {
        "r-mean" => base(name, DistributionSpec::Bernoulli { p: 0.5 }, None, LearnerSpec::RMean, 0.02, 0.01, 0.2, 1000),
        "r-quantile" => base(
            name,
            DistributionSpec::UniformRange { support: 64 },
            None,
            LearnerSpec::RQuantile { q: 0.5 },
            0.1,
            0.05,
            0.3,
            300,
        ),
        "aff-parity" => base(
            name,
            DistributionSpec::Uniform { d: 10 },
            Some(TargetSpec::AffineParity { w: 0b10_1100_1101, b: true }),
            LearnerSpec::RAffParity,
            0.1,
            0.01,
            0.02,
            500,
        ),
        "ge-nonreplicable" => ExperimentConfig {
            n: Some(200),
            ..base(
                name,
                DistributionSpec::HardInstance { d: 10, n: 200 },
                Some(TargetSpec::AffineParity { w: 0b10_1100_1101, b: true }),
                LearnerSpec::NaiveGaussian { shared_guesses: false },
                0.1,
                0.05,
                0.5,
                1000,
            )
        },
        "ows-learn" => base(
            name,
            DistributionSpec::OwsChain {
                d: 36,
                seed_index: 0b10110,
                positives_only: false,
            },
            None,
            LearnerSpec::ROws,
            0.2,
            0.05,
            0.3,
            300,
        ),
        "build-dt" => base(
            name,
            DistributionSpec::Tree {
                d: 6,
                tree: BUILD_DT_TREE.to_string(),
            },
            Some(TargetSpec::AllZero),
            LearnerSpec::RBuildDt {
                depth: 2,
                estimator: EstimatorSpec::Monotone,
            },
            0.2,
            0.1,
            0.5,
            100,
        ),
        "parity-lift" => base(
            name,
            DistributionSpec::HardInstance { d: 8, n: 200 },
            Some(TargetSpec::AffineParity { w: 0b1011_0101, b: true }),
            LearnerSpec::Lift {
                depth: 1,
                estimator: EstimatorSpec::Monotone,
                uniform_learner: UniformLearnerSpec::AffParity,
            },
            0.25,
            0.1,
            0.5,
            100,
        ),
        "dp2rep-weak" => base(
            name,
            DistributionSpec::Uniform { d: 4 },
            Some(TargetSpec::Point { index: 0b0110 }),
            LearnerSpec::Dp2rep {
                epsilon: 0.1,
                m0: Some(22),
                max_candidates: default_max_candidates(),
            },
            0.125,
            0.05,
            0.2,
            300,
        ),
        "coin" => base(
            name,
            DistributionSpec::Uniform { d: 1 },
            Some(TargetSpec::AllZero),
            LearnerSpec::Coin,
            0.5,
            0.05,
            0.5,
            1000,
        ),
        "constant" => base(
            name,
            DistributionSpec::Uniform { d: 1 },
            Some(TargetSpec::AllZero),
            LearnerSpec::Constant,
            0.5,
            0.05,
            0.5,
            1000,
        ),
        _ => return None,
    };
    Some(config)
}
