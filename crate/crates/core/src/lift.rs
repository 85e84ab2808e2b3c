//! Confidence boosting and lifting of uniform-marginal learners to
//! decision-tree distributions.

use std::fmt;

use crate::bits::BitVector;
use crate::data::{multinomial, ConditionalSampleOracle, Dataset, DatasetOracle, LabeledExample, SampleOracle};
use crate::dtdist::{r_build_dt, DecisionTreeDistribution, TreeNode, TreeSource};
use crate::error::{check_unit_open, Error, Result};
use crate::hypothesis::Hypothesis;
use crate::parity::{aff_parity_budget, r_aff_parity};
use crate::rstat::{finite_distr_sample_size, mean_sample_size, r_finite_distr_est_counts, r_mean_from_sum};
use crate::seedstream::SeedStream;

/// Concept classes a uniform learner may declare.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConceptClass {
    AffineParity,
    /// Parities without a bias term; a restriction can introduce one.
    Parity,
    PointFunctions,
    AllFunctions,
}

impl ConceptClass {
    /// Whether fixing any coordinate of a member yields another member.
    pub fn closed_under_restriction(self) -> bool {
        matches!(self, ConceptClass::AffineParity | ConceptClass::AllFunctions)
    }
}

/// A replicable learner for a concept class under uniform marginals.
pub trait UniformLearner: Send + Sync {
    fn class(&self) -> ConceptClass;

    /// Samples consumed by one call to [`UniformLearner::learn`].
    fn sample_size(&self, d: usize, alpha: f64, rho: f64, beta: f64) -> u128;

    fn learn(
        &self,
        source: &mut dyn SampleOracle,
        alpha: f64,
        rho: f64,
        beta: f64,
        shared: &SeedStream,
        data: &mut SeedStream,
    ) -> Result<Hypothesis>;
}

/// Rejects learners whose class is not closed under restriction.
pub fn register(learner: &dyn UniformLearner) -> Result<()> {
    if learner.class().closed_under_restriction() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{:?} is not closed under restriction and cannot be lifted",
            learner.class()
        )))
    }
}

/// [`r_aff_parity`] as a uniform learner. Accuracy is ignored: recovery is exact.
#[derive(Debug, Clone, Copy, Default)]
pub struct AffParityLearner;

impl UniformLearner for AffParityLearner {
    fn class(&self) -> ConceptClass {
        ConceptClass::AffineParity
    }

    fn sample_size(&self, d: usize, _alpha: f64, rho: f64, beta: f64) -> u128 {
        1 + aff_parity_budget(d, rho, beta) as u128
    }

    fn learn(
        &self,
        source: &mut dyn SampleOracle,
        _alpha: f64,
        rho: f64,
        beta: f64,
        shared: &SeedStream,
        data: &mut SeedStream,
    ) -> Result<Hypothesis> {
        r_aff_parity(source, beta, rho, shared, data)
    }
}

/// Memorizes the labels it sees; unseen points are labeled 0.
///
/// Replicable because with enough samples every point of the cube is seen and
/// the output is the target's truth table.
#[derive(Debug, Clone, Copy, Default)]
pub struct TruthTableLearner;

impl UniformLearner for TruthTableLearner {
    fn class(&self) -> ConceptClass {
        ConceptClass::AllFunctions
    }

    fn sample_size(&self, d: usize, _alpha: f64, rho: f64, beta: f64) -> u128 {
        let cube = 2f64.powi(d as i32);
        (cube * (cube / (rho * beta)).ln()).ceil() as u128
    }

    fn learn(
        &self,
        source: &mut dyn SampleOracle,
        alpha: f64,
        rho: f64,
        beta: f64,
        shared: &SeedStream,
        data: &mut SeedStream,
    ) -> Result<Hypothesis> {
        let d = source.dim();
        let samples = source.draw_many(self.sample_size(d, alpha, rho, beta), data)?;
        let mut values = BitVector::zeros(1 << d);
        for (e, _) in samples.entries() {
            if e.y {
                values.set(e.x.to_index() as usize, true);
            }
        }
        shared.charge(rho);
        Ok(Hypothesis::Table { dim: d, values })
    }
}

/// Weak-learner runs made by [`r_boost`]: `⌈8·ln(2/β)⌉`.
pub fn boost_runs(beta: f64) -> usize {
    (8.0 * (2.0 / beta).ln() - 1e-9).ceil().max(1.0) as usize
}

/// Samples [`r_boost`] draws from its source.
pub fn boost_sample_size(learner: &dyn UniformLearner, d: usize, alpha: f64, beta: f64, rho: f64) -> u128 {
    let n = boost_runs(beta);
    let run_rho = rho / (2.0 * n as f64);
    let per_run = learner.sample_size(d, alpha, run_rho, 1.0 / 6.0);
    let err = mean_sample_size(1.0, alpha * run_rho / 4.0, beta / (2.0 * n as f64));
    per_run * n as u128 + err
}

/// Boosts a weak learner's confidence to `1 − β`.
///
/// Runs the learner `⌈8·ln(2/β)⌉` times at confidence 1/6, estimates every
/// candidate's error on one held-out sample with replicable rounding, and
/// returns the first minimizer. A failed run scores `+∞`.
pub fn r_boost(
    weak: &dyn UniformLearner,
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
    if beta >= rho / 3.0 {
        return Err(Error::Parameter(format!("confidence {beta} must be below rho/3 = {}", rho / 3.0)));
    }
    let n = boost_runs(beta);
    let run_rho = rho / (2.0 * n as f64);
    let run_beta = beta / (2.0 * n as f64);
    let mut candidates: Vec<Result<Hypothesis>> = Vec::with_capacity(n);
    for t in 0..n {
        let s = shared.derive(&format!("run-{t}"));
        candidates.push(weak.learn(source, alpha, run_rho, 1.0 / 6.0, &s, data));
    }
    let raw = alpha * run_rho / 4.0;
    let m = mean_sample_size(1.0, raw, run_beta);
    let holdout = source.draw_many(m, data)?;
    let mut best: Option<(usize, f64)> = None;
    for (t, c) in candidates.iter().enumerate() {
        let Ok(h) = c else { continue };
        let err = r_mean_from_sum(
            holdout.mistakes(h) as f64,
            m,
            (0.0, 1.0),
            raw,
            run_rho,
            run_beta,
            &shared.derive(&format!("error-{t}")),
        )?;
        if best.is_none_or(|(_, b)| err < b) {
            best = Some((t, err));
        }
    }
    match best {
        Some((t, _)) => candidates.swap_remove(t),
        None => candidates.swap_remove(0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LiftNode {
    Leaf(Hypothesis),
    Split {
        coord: usize,
        zero: Box<LiftNode>,
        one: Box<LiftNode>,
    },
}

/// A tree routing each input to a per-leaf hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedHypothesis {
    pub root: LiftNode,
}

impl LiftedHypothesis {
    pub fn eval(&self, x: &BitVector) -> bool {
        let mut node = &self.root;
        loop {
            match node {
                LiftNode::Leaf(h) => return h.eval(x),
                LiftNode::Split { coord, zero, one } => {
                    node = if x.get(*coord) { one } else { zero };
                }
            }
        }
    }

    /// Leaf hypotheses, zero branch first.
    pub fn leaves(&self) -> Vec<&Hypothesis> {
        fn walk<'a>(n: &'a LiftNode, out: &mut Vec<&'a Hypothesis>) {
            match n {
                LiftNode::Leaf(h) => out.push(h),
                LiftNode::Split { zero, one, .. } => {
                    walk(zero, out);
                    walk(one, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    pub fn canonical(&self) -> String {
        fn write(n: &LiftNode, out: &mut String) {
            match n {
                LiftNode::Leaf(h) => {
                    out.push('{');
                    out.push_str(&h.canonical());
                    out.push('}');
                }
                LiftNode::Split { coord, zero, one } => {
                    out.push_str(&format!("(x{coord} "));
                    write(zero, out);
                    out.push(' ');
                    write(one, out);
                    out.push(')');
                }
            }
        }
        let mut s = String::from("LIFT;");
        write(&self.root, &mut s);
        s
    }
}

impl fmt::Display for LiftedHypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

fn graft(node: &TreeNode, leaves: &mut std::vec::IntoIter<Hypothesis>) -> LiftNode {
    match node {
        TreeNode::Leaf(_) => LiftNode::Leaf(leaves.next().expect("one hypothesis per leaf")),
        TreeNode::Split { coord, zero, one } => LiftNode::Split {
            coord: *coord,
            zero: Box::new(graft(zero, leaves)),
            one: Box::new(graft(one, leaves)),
        },
    }
}

/// Replaces the path coordinates of every example with fresh uniform bits.
fn rerandomize(pool: &Dataset, path: &[(usize, bool)], data: &mut SeedStream) -> Result<Dataset> {
    let patterns = 1usize << path.len();
    let probs = vec![1.0 / patterns as f64; patterns];
    let mut out = Vec::new();
    for (e, c) in pool.entries() {
        let counts = multinomial(*c, &probs, data);
        for (pattern, k) in counts.into_iter().enumerate() {
            if k == 0 {
                continue;
            }
            let mut x = e.x.clone();
            for (t, &(coord, _)) in path.iter().enumerate() {
                x.set(coord, (pattern >> t) & 1 == 1);
            }
            out.push((LabeledExample::new(x, e.y), k));
        }
    }
    Dataset::from_counts(pool.dim(), out)
}

/// Lifts a uniform learner along `tree`.
///
/// Leaf masses are estimated replicably; each leaf above the mass gate gets a
/// boosted learner run on its samples with path coordinates re-randomized, the
/// rest get a keyed pseudorandom guess.
#[allow(clippy::too_many_arguments)]
pub fn r_lift(
    tree: &DecisionTreeDistribution,
    learner: &dyn UniformLearner,
    source: &mut dyn SampleOracle,
    alpha: f64,
    beta: f64,
    rho: f64,
    shared: &SeedStream,
    data: &mut SeedStream,
) -> Result<LiftedHypothesis> {
    check_unit_open("alpha", alpha)?;
    check_unit_open("beta", beta)?;
    check_unit_open("rho", rho)?;
    if beta >= rho / 3.0 {
        return Err(Error::Parameter(format!("confidence {beta} must be below rho/3 = {}", rho / 3.0)));
    }
    register(learner)?;
    let d = source.dim();
    if tree.dim() != d {
        return Err(Error::Parameter(format!("tree dimension {} differs from data dimension {d}", tree.dim())));
    }
    let shared = shared.derive("lift");
    let width = 2f64.powi(tree.depth() as i32);
    let leaves = tree.leaves();

    let mass_acc = alpha / (12.0 * width);
    let m1 = finite_distr_sample_size(leaves.len(), mass_acc, rho / 3.0, beta / 2.0);
    let first = source.draw_many(m1, data)?;
    let mut counts = vec![0u128; leaves.len()];
    for (e, c) in first.entries() {
        counts[tree.leaf_of(&e.x).0] += c;
    }
    let masses = r_finite_distr_est_counts(&counts, mass_acc, beta / 2.0, rho / 3.0, &shared.derive("leaf-mass"))?;

    let gate = alpha / (4.0 * width);
    let leaf_alpha = alpha / 6.0;
    let leaf_beta = beta / (2.0 * width);
    let leaf_rho = rho / (3.0 * width);
    let per_leaf = boost_sample_size(learner, d, leaf_alpha, leaf_beta, leaf_rho);
    let lower_mass = alpha / (6.0 * width);
    let lambda = 1.0 + (4.0 * width / beta).ln();
    let m2 = (lambda * per_leaf as f64 / lower_mass).ceil() as u128;
    let learned: Vec<bool> = masses.as_slice().iter().map(|&p| p >= gate).collect();
    let second = if learned.iter().any(|&b| b) {
        source.draw_many(m2, data)?
    } else {
        Dataset::empty(d)
    };

    let mut hyps = Vec::with_capacity(leaves.len());
    for (k, (pi, _)) in leaves.iter().enumerate() {
        let label = pi.key();
        let leaf_stream = shared.derive("leaf").derive(&label);
        if learned[k] {
            let pool = second.filter(|e| tree.leaf_of(&e.x).0 == k);
            let pool = rerandomize(&pool, pi.pairs(), data)?;
            let mut oracle = DatasetOracle::new(pool, label)?;
            hyps.push(r_boost(learner, &mut oracle, leaf_alpha, leaf_beta, leaf_rho, &leaf_stream, data)?);
        } else {
            hyps.push(Hypothesis::KeyedGuess {
                key: leaf_stream.derive("guess").key(),
            });
        }
    }
    Ok(LiftedHypothesis {
        root: graft(tree.root(), &mut hyps.into_iter()),
    })
}

/// Which influence estimator the tree-learning stage uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeEstimator {
    Monotone,
    Subcube,
}

/// Tree learning at TV accuracy `α/(18m)` followed by [`r_lift`], each with
/// half of `rho` and `beta`.
#[allow(clippy::too_many_arguments)]
pub fn lift_end_to_end(
    source: &mut dyn ConditionalSampleOracle,
    estimator: TreeEstimator,
    learner: &dyn UniformLearner,
    depth: usize,
    alpha: f64,
    beta: f64,
    rho: f64,
    shared: &SeedStream,
    data: &mut SeedStream,
) -> Result<LiftedHypothesis> {
    check_unit_open("alpha", alpha)?;
    check_unit_open("beta", beta)?;
    check_unit_open("rho", rho)?;
    register(learner)?;
    let d = source.dim();
    let tree_alpha = tree_accuracy(learner, d, depth, alpha, beta / 2.0, rho / 2.0);
    let tree_source = match estimator {
        TreeEstimator::Monotone => TreeSource::Monotone(&mut *source),
        TreeEstimator::Subcube => TreeSource::Conditional(&mut *source),
    };
    let tree = r_build_dt(
        tree_source,
        depth,
        tree_alpha,
        beta / 2.0,
        rho / 2.0,
        &shared.derive("tree"),
        data,
    )?;
    let h = r_lift(&tree, learner, source, alpha, beta / 2.0, rho / 2.0, shared, data)?;
    Ok(h)
}

/// `α/(18m)` with `m` the learner's per-run sample size inside the leaf boosts.
pub fn tree_accuracy(learner: &dyn UniformLearner, d: usize, depth: usize, alpha: f64, beta: f64, rho: f64) -> f64 {
    let width = 2f64.powi(depth as i32);
    let leaf_beta = beta / (2.0 * width);
    let leaf_rho = rho / (3.0 * width);
    let runs = boost_runs(leaf_beta);
    let m = learner.sample_size(d, alpha / 6.0, leaf_rho / (2.0 * runs as f64), 1.0 / 6.0);
    alpha / (18.0 * m as f64)
}
