//! Experiments assembled from a validated config.

use replicable::dp2rep::{dp_to_replicable_weak, ExponentialMechanism, FiniteClass, WeakLearnerConfig};
use replicable::dtdist::{r_build_dt, DecisionTreeDistribution, TreeSource};
use replicable::lift::{lift_end_to_end, AffParityLearner, TreeEstimator, TruthTableLearner, UniformLearner};
use replicable::ows::{index_width, ows_sample_size, r_learner_ows, OwsConcept};
use replicable::parity::{naive_parity_learner, r_aff_parity, ProductDistribution};
use replicable::rquantile::{quantile_sample_size, r_quantile_est, EmpiricalCdf};
use replicable::rstat::{mean_sample_size, r_mean_from_sum};
use replicable::{BitVector, FiniteDistribution, Hypothesis, LabeledExample, Result, SampleOracle, SeedStream};

use crate::accuracy::marginal_table;
use crate::config::{range_bits, DistributionSpec, EstimatorSpec, ExperimentConfig, LearnerSpec, TargetSpec, UniformLearnerSpec};
use crate::error::BenchError;
use crate::harness::{Experiment, Outcome};

/// A config bound to its population distribution.
pub struct ConfiguredExperiment {
    config: ExperimentConfig,
    population: FiniteDistribution,
    /// Marginal over the cube, kept for tree-learning error.
    marginal: Option<Vec<f64>>,
}

pub fn target_hypothesis(target: &TargetSpec, d: usize) -> Hypothesis {
    match target {
        TargetSpec::AllZero => Hypothesis::AllZero,
        TargetSpec::AffineParity { w, b } => Hypothesis::AffineParity {
            w: BitVector::from_index(*w, d),
            b: *b,
        },
        TargetSpec::Point { index } => Hypothesis::Point(BitVector::from_index(*index, d)),
    }
}

/// The labeled population a config describes.
pub fn population(config: &ExperimentConfig) -> Result<FiniteDistribution> {
    let d = config.distribution.dim();
    let target = config
        .target
        .as_ref()
        .map(|t| target_hypothesis(t, d))
        .unwrap_or(Hypothesis::AllZero);
    match &config.distribution {
        DistributionSpec::Bernoulli { p } => FiniteDistribution::new(
            1,
            vec![
                LabeledExample::new(BitVector::from_bools(&[false]), false),
                LabeledExample::new(BitVector::from_bools(&[true]), true),
            ],
            vec![1.0 - p, *p],
        ),
        DistributionSpec::UniformRange { support } => {
            let bits = range_bits(*support);
            let points = (0..*support)
                .map(|j| LabeledExample::new(BitVector::from_index(j, bits), false))
                .collect();
            FiniteDistribution::new(bits, points, vec![1.0 / *support as f64; *support as usize])
        }
        DistributionSpec::Uniform { d } => ProductDistribution::uniform(*d).labeled(&target),
        DistributionSpec::Product { p } => ProductDistribution::new(p.clone())?.labeled(&target),
        DistributionSpec::HardInstance { d, n } => ProductDistribution::hard_instance(*d, *n)?.labeled(&target),
        DistributionSpec::Tree { d, tree } => DecisionTreeDistribution::parse(*d, tree)?.labeled(|x| target.eval(x)),
        DistributionSpec::OwsChain {
            d,
            seed_index,
            positives_only,
        } => {
            let seed = BitVector::from_index(*seed_index, index_width(*d));
            OwsConcept::new(seed, *d)?.chain_distribution(*positives_only)
        }
    }
}

impl ConfiguredExperiment {
    pub fn new(config: ExperimentConfig) -> std::result::Result<Self, BenchError> {
        config.validate()?;
        let population = population(&config)?;
        let marginal = match config.learner {
            LearnerSpec::RBuildDt { .. } => Some(marginal_table(&population)?),
            _ => None,
        };
        Ok(Self {
            config,
            population,
            marginal,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn population(&self) -> &FiniteDistribution {
        &self.population
    }

    fn run(&self, shared: &SeedStream, data: &mut SeedStream) -> Result<(String, Option<f64>)> {
        let c = &self.config;
        let (alpha, beta, rho) = (c.alpha, c.beta, c.rho);
        let mut pop = self.population.clone();
        let hypothesis = |h: Hypothesis, pop: &FiniteDistribution| {
            let err = pop.error_of(&h);
            (h.canonical(), Some(err))
        };
        Ok(match &c.learner {
            LearnerSpec::RMean => {
                let n = c.n.map(u128::from).unwrap_or_else(|| mean_sample_size(1.0, alpha, beta));
                let ones = pop.draw_count(n, &|e| e.x.get(0), data)?;
                let v = r_mean_from_sum(ones as f64, n, (0.0, 1.0), alpha, rho, beta, shared)?;
                let p = pop.mass_where(|e| e.x.get(0));
                (format!("{v:?}"), Some((v - p).abs()))
            }
            LearnerSpec::RQuantile { q } => {
                let support = pop.support().len();
                let n = c
                    .n
                    .map(u128::from)
                    .unwrap_or_else(|| quantile_sample_size(support as u64, alpha, rho, beta).ceil() as u128);
                let mut counts = vec![0u128; support];
                for (e, k) in pop.draw_many(n, data)?.entries() {
                    counts[e.x.to_index() as usize] += k;
                }
                let v = r_quantile_est(&EmpiricalCdf::from_counts(&counts)?, *q, alpha, rho, beta, shared)?;
                let cdf = |x: u64| x as f64 / support as f64;
                let err = (q - cdf(v)).max(cdf(v - 1) - q).max(0.0);
                (v.to_string(), Some(err))
            }
            LearnerSpec::RAffParity => hypothesis(r_aff_parity(&mut pop, beta, rho, shared, data)?, &pop),
            LearnerSpec::NaiveGaussian { shared_guesses } => {
                let n = c.n.expect("validated") as u128;
                let samples = pop.draw_many(n, data)?;
                let mut guesses = if *shared_guesses {
                    shared.derive("guesses")
                } else {
                    data.derive("guesses")
                };
                hypothesis(naive_parity_learner(&samples, &mut guesses)?, &pop)
            }
            LearnerSpec::ROws => {
                let k = index_width(pop.dim());
                let n = c
                    .n
                    .map(u128::from)
                    .unwrap_or_else(|| ows_sample_size(k, alpha, rho, beta).ceil() as u128);
                let samples = pop.draw_many(n, data)?;
                hypothesis(r_learner_ows(&samples, alpha, rho, beta, shared)?, &pop)
            }
            LearnerSpec::RBuildDt { depth, estimator } => {
                let source = match estimator {
                    EstimatorSpec::Monotone => TreeSource::Monotone(&mut pop),
                    EstimatorSpec::Subcube => TreeSource::Conditional(&mut pop),
                };
                let tree = r_build_dt(source, *depth, alpha, beta, rho, shared, data)?;
                let table = self.marginal.as_ref().expect("built for tree learners");
                let d = tree.dim();
                let tv = 0.5
                    * table
                        .iter()
                        .enumerate()
                        .map(|(j, p)| (tree.pmf(&BitVector::from_index(j as u64, d)) - p).abs())
                        .sum::<f64>();
                (tree.serialize(), Some(tv))
            }
            LearnerSpec::Lift {
                depth,
                estimator,
                uniform_learner,
            } => {
                let learner: &dyn UniformLearner = match uniform_learner {
                    UniformLearnerSpec::AffParity => &AffParityLearner,
                    UniformLearnerSpec::TruthTable => &TruthTableLearner,
                };
                let estimator = match estimator {
                    EstimatorSpec::Monotone => TreeEstimator::Monotone,
                    EstimatorSpec::Subcube => TreeEstimator::Subcube,
                };
                let h = lift_end_to_end(&mut pop, estimator, learner, *depth, alpha, beta, rho, shared, data)?;
                hypothesis(Hypothesis::Lifted(Box::new(h)), &pop)
            }
            LearnerSpec::Dp2rep {
                epsilon,
                m0,
                max_candidates,
            } => {
                let mech = ExponentialMechanism::new(*epsilon)?;
                let class = FiniteClass::point_functions(pop.dim());
                let config = WeakLearnerConfig {
                    m0: *m0,
                    max_candidates: *max_candidates,
                };
                hypothesis(dp_to_replicable_weak(&mech, &class, &mut pop, rho, beta, config, shared, data)?, &pop)
            }
            LearnerSpec::Constant => hypothesis(Hypothesis::Constant(false), &pop),
            LearnerSpec::Coin => hypothesis(Hypothesis::Constant(data.bernoulli(0.5)), &pop),
        })
    }
}

impl Experiment for ConfiguredExperiment {
    fn run_once(&self, shared: &SeedStream, data: &mut SeedStream) -> Outcome {
        match self.run(shared, data) {
            Ok((output, error)) => Outcome::ok(output, error),
            Err(e) => Outcome::failed(e),
        }
    }
}
