use replicable::data::SampleOracle;
use replicable::dtdist::{DecisionTreeDistribution, TreeNode};
use replicable::lift::{
    lift_end_to_end, r_boost, r_lift, AffParityLearner, ConceptClass, TreeEstimator, TruthTableLearner,
    UniformLearner,
};
use replicable::parity::ProductDistribution;
use replicable::{BitVector, BudgetLedger, Hypothesis, Result, SeedStream};

fn parity(w: u64, b: bool, d: usize) -> Hypothesis {
    Hypothesis::AffineParity {
        w: BitVector::from_index(w, d),
        b,
    }
}

fn exact_uniform_error(h: &Hypothesis, f: impl Fn(&BitVector) -> bool, d: usize) -> f64 {
    let bad = (0..1u64 << d)
        .filter(|&j| {
            let x = BitVector::from_index(j, d);
            h.eval(&x) != f(&x)
        })
        .count();
    bad as f64 / (1u64 << d) as f64
}

struct Fixed(Hypothesis);

impl UniformLearner for Fixed {
    fn class(&self) -> ConceptClass {
        ConceptClass::AllFunctions
    }
    fn sample_size(&self, _: usize, _: f64, _: f64, _: f64) -> u128 {
        0
    }
    fn learn(&self, _: &mut dyn SampleOracle, _: f64, _: f64, _: f64, _: &SeedStream, _: &mut SeedStream) -> Result<Hypothesis> {
        Ok(self.0.clone())
    }
}

/// Returns the target or the all-zero function on a shared fair coin.
struct HalfRight(Hypothesis);

impl UniformLearner for HalfRight {
    fn class(&self) -> ConceptClass {
        ConceptClass::AffineParity
    }
    fn sample_size(&self, _: usize, _: f64, _: f64, _: f64) -> u128 {
        0
    }
    fn learn(&self, _: &mut dyn SampleOracle, _: f64, _: f64, _: f64, shared: &SeedStream, _: &mut SeedStream) -> Result<Hypothesis> {
        Ok(if shared.derive("coin").bernoulli(0.5) {
            self.0.clone()
        } else {
            Hypothesis::AllZero
        })
    }
}

#[test]
fn constant_weak_learner_is_returned() {
    let mut dist = ProductDistribution::uniform(3).labeled(&parity(0b011, false, 3)).unwrap();
    let h = Hypothesis::Constant(true);
    let out = r_boost(&Fixed(h.clone()), &mut dist, 0.1, 0.05, 0.3, &SeedStream::new(1), &mut SeedStream::data(1)).unwrap();
    assert_eq!(out, h);
}

#[test]
fn boosting_picks_the_target_over_a_half_error_hypothesis() {
    let d = 6;
    let target = parity(0b100101, false, d);
    assert_eq!(exact_uniform_error(&Hypothesis::AllZero, |x| target.eval(x), d), 0.5);
    let mut dist = ProductDistribution::uniform(d).labeled(&target).unwrap();
    let mut hits = 0;
    for t in 0..30 {
        let out = r_boost(&HalfRight(target.clone()), &mut dist, 0.1, 0.05, 0.3, &SeedStream::new(t), &mut SeedStream::data(t)).unwrap();
        if exact_uniform_error(&out, |x| target.eval(x), d) == 0.0 {
            hits += 1;
        }
    }
    assert!(hits >= 27, "{hits}");
}

#[test]
fn single_leaf_lift_is_one_boost() {
    let d = 5;
    let target = parity(0b10011, true, d);
    let mut dist = ProductDistribution::uniform(d).labeled(&target).unwrap();
    let tree = DecisionTreeDistribution::uniform(d);
    let h = r_lift(&tree, &AffParityLearner, &mut dist, 0.2, 0.05, 0.3, &SeedStream::new(2), &mut SeedStream::data(2)).unwrap();
    let leaves = h.leaves();
    assert_eq!(leaves.len(), 1);
    assert_eq!(leaves[0], &target);
}

#[test]
fn hard_instance_pipeline_is_accurate_within_budget() {
    let d = 8;
    let (alpha, beta, rho) = (0.25, 0.1, 0.5);
    let target = parity(0b1011_0101, true, d);
    let product = ProductDistribution::hard_instance(d, 200).unwrap();
    let mut dist = product.labeled(&target).unwrap();
    let mut guesses = Vec::new();
    for s in 0..4 {
        let ledger = BudgetLedger::new();
        let shared = SeedStream::new(5).with_ledger(&ledger);
        let h = lift_end_to_end(&mut dist, TreeEstimator::Monotone, &AffParityLearner, 1, alpha, beta, rho, &shared, &mut SeedStream::data(s)).unwrap();
        assert!(ledger.total() <= rho + 1e-12, "{}", ledger.total());
        let h = Hypothesis::Lifted(Box::new(h));
        let exact: f64 = (0..1u64 << d)
            .map(|j| {
                let x = BitVector::from_index(j, d);
                if h.eval(&x) != target.eval(&x) { product.pmf(&x) } else { 0.0 }
            })
            .sum();
        assert!(exact <= alpha, "{exact}");
        assert!((exact - dist.error_of(&h)).abs() < 1e-12);
        let Hypothesis::Lifted(l) = &h else { unreachable!() };
        guesses.extend(l.leaves().into_iter().filter(|g| matches!(g, Hypothesis::KeyedGuess { .. })).cloned());
    }
    assert!(!guesses.is_empty());
    assert!(guesses.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn truth_table_learner_lifts_to_zero_error() {
    let d = 6;
    let tree = DecisionTreeDistribution::new(d, TreeNode::split(2, TreeNode::Leaf(0.5), TreeNode::Leaf(1.5))).unwrap();
    let f = |x: &BitVector| (x.get(0) && x.get(1)) ^ x.get(5);
    let mut dist = tree.labeled(f).unwrap();
    for s in 0..2 {
        let h = lift_end_to_end(&mut dist, TreeEstimator::Monotone, &TruthTableLearner, 1, 0.25, 0.1, 0.5, &SeedStream::new(s), &mut SeedStream::data(s)).unwrap();
        let h = Hypothesis::Lifted(Box::new(h));
        assert_eq!(exact_uniform_error(&h, f, d), 0.0, "{h}");
    }
}
