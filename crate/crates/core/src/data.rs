//! Labeled samples and the oracles that produce them.
//!
//! Datasets are stored as exact histograms (distinct example, multiplicity), so
//! a sample of 10^9 draws from a distribution with a few hundred support points
//! costs a few hundred binomial draws instead of 10^9 coin flips. All learners
//! consume samples through [`SampleOracle`]; oracles only accept data-channel
//! streams.

use std::collections::BTreeMap;
use std::fmt;

use rand_distr::{Binomial, Distribution, Hypergeometric};

use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;
use crate::seedstream::SeedStream;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabeledExample {
    pub x: BitVector,
    pub y: bool,
}

impl LabeledExample {
    pub fn new(x: BitVector, y: bool) -> Self {
        Self { x, y }
    }
}

/// A multiset of labeled examples, kept sorted with multiplicities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    dim: usize,
    entries: Vec<(LabeledExample, u128)>,
    total: u128,
}

impl Dataset {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
            total: 0,
        }
    }

    pub fn from_examples(dim: usize, examples: impl IntoIterator<Item = LabeledExample>) -> Result<Self> {
        Self::from_counts(dim, examples.into_iter().map(|e| (e, 1)))
    }

    pub fn from_counts(
        dim: usize,
        counts: impl IntoIterator<Item = (LabeledExample, u128)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<LabeledExample, u128> = BTreeMap::new();
        for (e, c) in counts {
            if e.x.len() != dim {
                return Err(Error::Data(format!(
                    "example of dimension {} in a dataset of dimension {dim}",
                    e.x.len()
                )));
            }
            if c > 0 {
                *map.entry(e).or_insert(0) += c;
            }
        }
        let total = map.values().sum();
        Ok(Self {
            dim,
            entries: map.into_iter().collect(),
            total,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of draws, counting multiplicity.
    pub fn total(&self) -> u128 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Distinct examples with their multiplicities, in sorted order.
    pub fn entries(&self) -> &[(LabeledExample, u128)] {
        &self.entries
    }

    pub fn count_where(&self, pred: impl Fn(&LabeledExample) -> bool) -> u128 {
        self.entries
            .iter()
            .filter(|(e, _)| pred(e))
            .map(|(_, c)| *c)
            .sum()
    }

    pub fn filter(&self, pred: impl Fn(&LabeledExample) -> bool) -> Dataset {
        let entries: Vec<_> = self.entries.iter().filter(|(e, _)| pred(e)).cloned().collect();
        let total = entries.iter().map(|(_, c)| *c).sum();
        Dataset {
            dim: self.dim,
            entries,
            total,
        }
    }

    /// Number of examples on which `h` disagrees with the label.
    pub fn mistakes(&self, h: &Hypothesis) -> u128 {
        self.count_where(|e| h.eval(&e.x) != e.y)
    }

    pub fn empirical_error(&self, h: &Hypothesis) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.mistakes(h) as f64 / self.total as f64
    }

    /// Merges another dataset of the same dimension into this one.
    pub fn merge(&self, other: &Dataset) -> Result<Dataset> {
        Dataset::from_counts(
            self.dim,
            self.entries.iter().chain(other.entries.iter()).cloned(),
        )
    }
}

/// A partial assignment of coordinates, kept sorted by coordinate.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Restriction {
    fixed: Vec<(usize, bool)>,
}

impl Restriction {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(usize, bool)]) -> Result<Self> {
        pairs
            .iter()
            .try_fold(Restriction::empty(), |r, &(i, b)| r.with(i, b))
    }

    /// Adds `x_i = bit`. Fails if `i` is already fixed.
    pub fn with(&self, i: usize, bit: bool) -> Result<Restriction> {
        match self.fixed.binary_search_by_key(&i, |&(j, _)| j) {
            Ok(_) => Err(Error::Domain(format!("coordinate {i} already fixed in [{self}]"))),
            Err(pos) => {
                let mut fixed = self.fixed.clone();
                fixed.insert(pos, (i, bit));
                Ok(Restriction { fixed })
            }
        }
    }

    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.fixed
            .binary_search_by_key(&i, |&(j, _)| j)
            .ok()
            .map(|k| self.fixed[k].1)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.get(i).is_some()
    }

    pub fn pairs(&self) -> &[(usize, bool)] {
        &self.fixed
    }

    /// `x ⊨ π`: every fixed coordinate agrees.
    pub fn satisfied_by(&self, x: &BitVector) -> bool {
        self.fixed.iter().all(|&(i, b)| x.get(i) == b)
    }

    /// `x_π`: `x` with the fixed coordinates overwritten.
    pub fn apply(&self, x: &BitVector) -> BitVector {
        let mut y = x.clone();
        for &(i, b) in &self.fixed {
            y.set(i, b);
        }
        y
    }

    /// Non-empty label used for stream derivation and memo keys.
    pub fn key(&self) -> String {
        if self.fixed.is_empty() {
            "root".to_owned()
        } else {
            self.to_string()
        }
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, &(i, b)) in self.fixed.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "x{i}={}", b as u8)?;
        }
        Ok(())
    }
}

/// A source of i.i.d. labeled examples.
pub trait SampleOracle: Send {
    fn dim(&self) -> usize;

    fn draw_many(&mut self, n: u128, rng: &mut SeedStream) -> Result<Dataset>;

    fn draw(&mut self, rng: &mut SeedStream) -> Result<LabeledExample> {
        let ds = self.draw_many(1, rng)?;
        Ok(ds.entries()[0].0.clone())
    }

    /// How many of `n` fresh draws satisfy `event`.
    fn draw_count(
        &mut self,
        n: u128,
        event: &dyn Fn(&LabeledExample) -> bool,
        rng: &mut SeedStream,
    ) -> Result<u128> {
        Ok(self.draw_many(n, rng)?.count_where(event))
    }
}

/// A source that can also sample conditioned on a subcube of the inputs.
pub trait ConditionalSampleOracle: SampleOracle {
    /// Oracle for `D` conditioned on `x ⊨ π`.
    fn condition(&self, pi: &Restriction) -> Result<Box<dyn SampleOracle>>;
}

/// `Binomial(n, p)` for `n` beyond `u64`.
pub fn binomial(n: u128, p: f64, rng: &mut SeedStream) -> u128 {
    let p = p.clamp(0.0, 1.0);
    if p == 0.0 || n == 0 {
        return 0;
    }
    if p == 1.0 {
        return n;
    }
    const CHUNK: u128 = 1 << 62;
    let mut left = n;
    let mut hits = 0u128;
    while left > 0 {
        let m = left.min(CHUNK);
        let dist = Binomial::new(m as u64, p).expect("valid binomial parameters");
        hits += dist.sample(rng) as u128;
        left -= m;
    }
    hits
}

/// Marked items among `n` drawn without replacement from `total` items of
/// which `marked` are marked.
pub fn hypergeometric(total: u64, marked: u64, n: u64, rng: &mut SeedStream) -> u64 {
    assert!(marked <= total && n <= total, "hypergeometric parameters out of range");
    if marked > total / 2 {
        return n - hypergeometric(total, total - marked, n, rng);
    }
    if n > total / 2 {
        return marked - hypergeometric(total, marked, total - n, rng);
    }
    if marked == 0 || n == 0 {
        return 0;
    }
    // Small-mode regime: rand_distr's inverse-transform setup is linear in `total`.
    if (marked as f64) * (n as f64) / (total as f64) >= 20.0 {
        return Hypergeometric::new(total, marked, n)
            .expect("valid hypergeometric parameters")
            .sample(rng);
    }
    let (draws, hits_pool) = (marked.min(n), marked.max(n));
    let mut hits = 0u64;
    for j in 0..draws {
        if (rng.uniform_unit() * (total - j) as f64) < (hits_pool - hits) as f64 {
            hits += 1;
        }
    }
    hits
}

/// Multinomial counts by sequential conditional binomials.
pub fn multinomial(n: u128, probs: &[f64], rng: &mut SeedStream) -> Vec<u128> {
    let mut suffix = vec![0.0; probs.len() + 1];
    for i in (0..probs.len()).rev() {
        suffix[i] = suffix[i + 1] + probs[i].max(0.0);
    }
    let mut counts = vec![0u128; probs.len()];
    let mut left = n;
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        let p = p.max(0.0);
        if p == 0.0 {
            continue;
        }
        let is_last = suffix[i + 1] <= 0.0;
        let c = if is_last { left } else { binomial(left, p / suffix[i], rng) };
        counts[i] = c;
        left -= c;
    }
    counts
}

/// A distribution with explicit finite support over labeled examples.
#[derive(Debug, Clone)]
pub struct FiniteDistribution {
    dim: usize,
    support: Vec<LabeledExample>,
    probs: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(dim: usize, support: Vec<LabeledExample>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != probs.len() {
            return Err(Error::Parameter(
                "support and probabilities must be non-empty and of equal length".into(),
            ));
        }
        if support.iter().any(|e| e.x.len() != dim) {
            return Err(Error::Data(format!("support point of wrong dimension (expected {dim})")));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Parameter("probabilities must be finite and non-negative".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self { dim, support, probs })
    }

    /// Enumerates `{0,1}^dim` with marginal `pmf`, labeling each point by `target`.
    pub fn from_pmf(
        dim: usize,
        pmf: impl Fn(&BitVector) -> f64,
        target: impl Fn(&BitVector) -> bool,
    ) -> Result<Self> {
        if dim > 24 {
            return Err(Error::Parameter(format!("cannot enumerate dimension {dim}")));
        }
        let mut support = Vec::new();
        let mut probs = Vec::new();
        for idx in 0..(1u64 << dim) {
            let x = BitVector::from_index(idx, dim);
            let p = pmf(&x);
            if p > 0.0 {
                let y = target(&x);
                support.push(LabeledExample::new(x, y));
                probs.push(p);
            }
        }
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        Self::new(dim, support, probs)
    }

    pub fn support(&self) -> &[LabeledExample] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mass_where(&self, pred: impl Fn(&LabeledExample) -> bool) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .filter(|(e, _)| pred(e))
            .map(|(_, p)| p)
            .sum()
    }

    /// Exact population error `Pr[h(x) ≠ y]`.
    pub fn error_of(&self, h: &Hypothesis) -> f64 {
        self.mass_where(|e| h.eval(&e.x) != e.y)
    }

    /// Conditional distribution on `x ⊨ π`. A subcube of zero mass yields the
    /// uniform distribution over it with every label `false`.
    pub fn restricted(&self, pi: &Restriction) -> Result<FiniteDistribution> {
        let mut support = Vec::new();
        let mut probs = Vec::new();
        for (e, &p) in self.support.iter().zip(&self.probs) {
            if p > 0.0 && pi.satisfied_by(&e.x) {
                support.push(e.clone());
                probs.push(p);
            }
        }
        let mass: f64 = probs.iter().sum();
        if mass <= 0.0 {
            let free = self.dim - pi.len();
            if free > 24 {
                return Err(Error::Domain(format!("empty subcube [{pi}] too large to enumerate")));
            }
            return FiniteDistribution::from_pmf(self.dim, |x| pi.satisfied_by(x) as u8 as f64, |_| false);
        }
        for p in &mut probs {
            *p /= mass;
        }
        FiniteDistribution::new(self.dim, support, probs)
    }
}

impl SampleOracle for FiniteDistribution {
    fn dim(&self) -> usize {
        self.dim
    }

    fn draw_many(&mut self, n: u128, rng: &mut SeedStream) -> Result<Dataset> {
        rng.require_data_channel()?;
        let counts = multinomial(n, &self.probs, rng);
        Dataset::from_counts(self.dim, self.support.iter().cloned().zip(counts))
    }

    fn draw_count(
        &mut self,
        n: u128,
        event: &dyn Fn(&LabeledExample) -> bool,
        rng: &mut SeedStream,
    ) -> Result<u128> {
        rng.require_data_channel()?;
        let p = self.mass_where(event);
        Ok(binomial(n, p, rng))
    }
}

impl ConditionalSampleOracle for FiniteDistribution {
    fn condition(&self, pi: &Restriction) -> Result<Box<dyn SampleOracle>> {
        Ok(Box::new(self.restricted(pi)?))
    }
}

/// Draws without replacement from a fixed pool of examples.
///
/// Once the pool runs dry further requests fail with
/// [`Error::LeafStarvation`] naming `label`.
#[derive(Debug, Clone)]
pub struct DatasetOracle {
    pool: Dataset,
    label: String,
}

impl DatasetOracle {
    pub fn new(pool: Dataset, label: impl Into<String>) -> Result<Self> {
        if pool.entries.iter().any(|(_, c)| *c > u64::MAX as u128) || pool.total > u64::MAX as u128 {
            return Err(Error::Parameter("pool too large for exact subsampling".into()));
        }
        Ok(Self {
            pool,
            label: label.into(),
        })
    }

    pub fn remaining(&self) -> u128 {
        self.pool.total
    }
}

impl SampleOracle for DatasetOracle {
    fn dim(&self) -> usize {
        self.pool.dim
    }

    fn draw_many(&mut self, n: u128, rng: &mut SeedStream) -> Result<Dataset> {
        rng.require_data_channel()?;
        if n > self.pool.total {
            return Err(Error::LeafStarvation {
                leaf: self.label.clone(),
                needed: n,
                available: self.pool.total,
            });
        }
        let mut left_n = n as u64;
        let mut left_pool = self.pool.total as u64;
        let mut taken = Vec::with_capacity(self.pool.entries.len());
        for (e, c) in self.pool.entries.iter_mut() {
            let k = if left_n == 0 {
                0
            } else if *c as u64 == left_pool {
                left_n
            } else {
                hypergeometric(left_pool, *c as u64, left_n, rng)
            };
            left_pool -= *c as u64;
            left_n -= k;
            *c -= k as u128;
            taken.push((e.clone(), k as u128));
        }
        self.pool.entries.retain(|(_, c)| *c > 0);
        self.pool.total -= n;
        Dataset::from_counts(self.pool.dim, taken)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin(dim: usize) -> FiniteDistribution {
        FiniteDistribution::from_pmf(dim, |_| 1.0, |x| x.get(0)).unwrap()
    }

    #[test]
    fn hypergeometric_means_in_both_regimes() {
        let mut rng = SeedStream::data(5);
        for (total, marked, n) in [(10_000_000_000_000u64, 3_000_000_000_000, 3), (1000, 300, 200), (1000, 990, 10)] {
            let trials = 4000;
            let sum: u64 = (0..trials).map(|_| hypergeometric(total, marked, n, &mut rng)).sum();
            let mean = n as f64 * marked as f64 / total as f64;
            let var = mean * (1.0 - marked as f64 / total as f64);
            let got = sum as f64 / trials as f64;
            assert!((got - mean).abs() < 5.0 * (var / trials as f64).sqrt() + 1e-9, "{got} vs {mean}");
        }
        assert_eq!(hypergeometric(50, 50, 7, &mut rng), 7);
        assert_eq!(hypergeometric(50, 0, 7, &mut rng), 0);
        assert_eq!(hypergeometric(50, 20, 50, &mut rng), 20);
    }

    #[test]
    fn multinomial_conserves_and_matches_means() {
        let mut rng = SeedStream::data(1);
        let probs = [0.1, 0.0, 0.6, 0.3];
        let n: u128 = 1_000_000_000_000_000_000_000;
        let c = multinomial(n, &probs, &mut rng);
        assert_eq!(c.iter().sum::<u128>(), n);
        assert_eq!(c[1], 0);
        for (ci, p) in c.iter().zip(probs) {
            assert!((*ci as f64 / n as f64 - p).abs() < 1e-6);
        }
    }

    #[test]
    fn oracles_reject_shared_streams() {
        let mut d = coin(3);
        assert!(matches!(
            d.draw_many(5, &mut SeedStream::new(1)),
            Err(Error::ChannelViolation(_))
        ));
    }

    #[test]
    fn finite_draws_are_reproducible() {
        let mut d = coin(4);
        let a = d.draw_many(1000, &mut SeedStream::data(3).derive("s")).unwrap();
        let b = d.draw_many(1000, &mut SeedStream::data(3).derive("s")).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total(), 1000);
    }

    #[test]
    fn dataset_oracle_is_without_replacement() {
        let mut d = coin(3);
        let pool = d.draw_many(100, &mut SeedStream::data(5)).unwrap();
        let mut o = DatasetOracle::new(pool.clone(), "leaf").unwrap();
        let mut rng = SeedStream::data(6);
        let a = o.draw_many(60, &mut rng).unwrap();
        let b = o.draw_many(40, &mut rng).unwrap();
        assert_eq!(a.merge(&b).unwrap(), pool);
        assert!(matches!(
            o.draw_many(1, &mut rng),
            Err(Error::LeafStarvation { needed: 1, available: 0, .. })
        ));
    }

    #[test]
    fn restriction_ordering_and_keys() {
        let r = Restriction::empty().with(3, true).unwrap().with(1, false).unwrap();
        assert_eq!(r.to_string(), "x1=0,x3=1");
        assert_eq!(Restriction::empty().key(), "root");
        assert!(r.with(3, false).is_err());
        let x = BitVector::from_index(0b1000, 4);
        assert!(r.satisfied_by(&x));
        assert_eq!(r.apply(&BitVector::ones(4)), BitVector::from_index(0b1101, 4));
    }

    #[test]
    fn conditioning_renormalizes() {
        let d = coin(2);
        let r = Restriction::from_pairs(&[(0, true)]).unwrap();
        let c = d.restricted(&r).unwrap();
        assert_eq!(c.support().len(), 2);
        assert!(c.support().iter().all(|e| e.y));
        assert!((c.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
