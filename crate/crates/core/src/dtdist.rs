//! Decision-tree distributions over `{0,1}^d`, influence estimation, and the
//! replicable tree learner.
//!
//! A tree computes the *scaled* pmf `f_D(x) = 2^d·D(x)`: a leaf reached by the
//! restriction `π` stores `p_π = 2^{|π|}·Pr[x ⊨ π]`, and `D` is uniform inside
//! each leaf subcube.
//!
//! Influences use the halved convention
//! `I_i(f) = ½·E_{x∼U}|f(x) − f(x^{~i})|`, under which a monotone distribution
//! has `I_i = 2·E_D[x_i] − 1` and the subcube estimator's expectation is exact.

use std::collections::HashMap;
use std::fmt;

use crate::bits::BitVector;
use crate::data::{ConditionalSampleOracle, Dataset, FiniteDistribution, Restriction, SampleOracle};
use crate::error::{check_unit_open, Error, Result};
use crate::parity::ProductDistribution;
use crate::rstat::{mean_sample_size, r_mean_from_sum};
use crate::seedstream::SeedStream;

/// Tolerance on `Σ_leaves 2^{-|π|}·p_π = 1`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Upper bound on the number of distinct restrictions [`r_build_dt`] may visit.
pub const MAX_RESTRICTIONS: u128 = 1_000_000;

/// Largest number of outer draws the subcube estimator will take.
pub const MAX_SUBCUBE_DRAWS: u128 = 50_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf(f64),
    Split {
        coord: usize,
        zero: Box<TreeNode>,
        one: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn split(coord: usize, zero: TreeNode, one: TreeNode) -> TreeNode {
        TreeNode::Split {
            coord,
            zero: Box::new(zero),
            one: Box::new(one),
        }
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 0,
            TreeNode::Split { zero, one, .. } => 1 + zero.depth().max(one.depth()),
        }
    }

    fn collect_leaves(&self, pi: &Restriction, out: &mut Vec<(Restriction, f64)>) {
        match self {
            TreeNode::Leaf(p) => out.push((pi.clone(), *p)),
            TreeNode::Split { coord, zero, one } => {
                zero.collect_leaves(&pi.with(*coord, false).expect("valid tree"), out);
                one.collect_leaves(&pi.with(*coord, true).expect("valid tree"), out);
            }
        }
    }

    fn map_leaves(&self, f: &mut impl FnMut(f64) -> f64) -> TreeNode {
        match self {
            TreeNode::Leaf(p) => TreeNode::Leaf(f(*p)),
            TreeNode::Split { coord, zero, one } => {
                TreeNode::split(*coord, zero.map_leaves(f), one.map_leaves(f))
            }
        }
    }

    fn validate(&self, d: usize, pi: &Restriction) -> Result<()> {
        match self {
            TreeNode::Leaf(p) => {
                if !p.is_finite() || *p < 0.0 {
                    return Err(Error::Parameter(format!("leaf [{pi}] has invalid value {p}")));
                }
                Ok(())
            }
            TreeNode::Split { coord, zero, one } => {
                if *coord >= d {
                    return Err(Error::Parameter(format!("coordinate {coord} outside dimension {d}")));
                }
                zero.validate(d, &pi.with(*coord, false)?)?;
                one.validate(d, &pi.with(*coord, true)?)
            }
        }
    }

    fn write(&self, out: &mut String) {
        match self {
            TreeNode::Leaf(p) => out.push_str(&format!("[p={p}]")),
            TreeNode::Split { coord, zero, one } => {
                out.push_str(&format!("(x{coord} "));
                zero.write(out);
                out.push(' ');
                one.write(out);
                out.push(')');
            }
        }
    }
}

/// A distribution whose scaled pmf is computed by a decision tree.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTreeDistribution {
    d: usize,
    root: TreeNode,
}

impl DecisionTreeDistribution {
    /// Validates structure (coordinates in range, none repeated on a path,
    /// non-negative leaves). Normalization is checked separately.
    pub fn new(d: usize, root: TreeNode) -> Result<Self> {
        root.validate(d, &Restriction::empty())?;
        Ok(Self { d, root })
    }

    pub fn uniform(d: usize) -> Self {
        Self {
            d,
            root: TreeNode::Leaf(1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Leaves with their restrictions, zero branch first.
    pub fn leaves(&self) -> Vec<(Restriction, f64)> {
        let mut out = Vec::new();
        self.root.collect_leaves(&Restriction::empty(), &mut out);
        out
    }

    /// Leaf masses `2^{-|π|}·p_π` in leaf order.
    pub fn leaf_masses(&self) -> Vec<f64> {
        self.leaves()
            .iter()
            .map(|(pi, p)| p * 0.5f64.powi(pi.len() as i32))
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.leaf_masses().iter().sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= NORMALIZATION_TOLERANCE
    }

    /// Index (in [`DecisionTreeDistribution::leaves`] order) and restriction of the leaf `x` reaches.
    pub fn leaf_of(&self, x: &BitVector) -> (usize, Restriction) {
        let mut node = &self.root;
        let mut pi = Restriction::empty();
        let mut index = 0usize;
        while let TreeNode::Split { coord, zero, one } = node {
            let bit = x.get(*coord);
            pi = pi.with(*coord, bit).expect("valid tree");
            if bit {
                index += leaf_count(zero);
                node = one;
            } else {
                node = zero;
            }
        }
        (index, pi)
    }

    /// Scaled pmf value `f_D(x)`.
    pub fn scaled_pmf(&self, x: &BitVector) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf(p) => return *p,
                TreeNode::Split { coord, zero, one } => {
                    node = if x.get(*coord) { one } else { zero };
                }
            }
        }
    }

    pub fn pmf(&self, x: &BitVector) -> f64 {
        assert_eq!(x.len(), self.d, "dimension mismatch");
        self.scaled_pmf(x) * 0.5f64.powi(self.d as i32)
    }

    /// One exact draw: a leaf by mass, then uniform free coordinates.
    pub fn sample(&self, rng: &mut SeedStream) -> Result<BitVector> {
        rng.require_data_channel()?;
        if !self.is_normalized() {
            return Err(Error::Parameter(format!(
                "tree mass {} is not normalized",
                self.total_mass()
            )));
        }
        let leaves = self.leaves();
        let masses = self.leaf_masses();
        let u = rng.uniform_unit();
        let mut acc = 0.0;
        let mut chosen = leaves.len() - 1;
        for (k, m) in masses.iter().enumerate() {
            acc += m;
            if u < acc && *m > 0.0 {
                chosen = k;
                break;
            }
        }
        let x = rng.random_bits(self.d);
        Ok(leaves[chosen].0.apply(&x))
    }

    /// The labeled distribution `(x, target(x))`, enumerated exactly.
    pub fn labeled(&self, target: impl Fn(&BitVector) -> bool) -> Result<FiniteDistribution> {
        if !self.is_normalized() {
            return Err(Error::Parameter("tree is not normalized".into()));
        }
        FiniteDistribution::from_pmf(self.d, |x| self.pmf(x), target)
    }

    /// Rescales leaves to total mass one, clipping negatives; an all-zero tree becomes uniform.
    pub fn renormalized(&self) -> Self {
        let clipped = self.root.map_leaves(&mut |p| p.max(0.0));
        let t = Self {
            d: self.d,
            root: clipped,
        };
        let mass = t.total_mass();
        if mass <= 0.0 {
            return Self {
                d: self.d,
                root: t.root.map_leaves(&mut |_| 1.0),
            };
        }
        Self {
            d: self.d,
            root: t.root.map_leaves(&mut |p| p / mass),
        }
    }

    /// Nested text form `(x<i> <zero> <one>)` / `[p=<value>]`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        self.root.write(&mut s);
        s
    }

    pub fn parse(d: usize, text: &str) -> Result<Self> {
        let mut p = Parser { s: text.as_bytes(), pos: 0 };
        let root = p.node()?;
        if p.pos != p.s.len() {
            return Err(Error::Data(format!("trailing input at byte {}", p.pos)));
        }
        Self::new(d, root)
    }
}

impl fmt::Display for DecisionTreeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

fn leaf_count(node: &TreeNode) -> usize {
    match node {
        TreeNode::Leaf(_) => 1,
        TreeNode::Split { zero, one, .. } => leaf_count(zero) + leaf_count(one),
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn expect(&mut self, lit: &str) -> Result<()> {
        if self.s[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            Ok(())
        } else {
            Err(Error::Data(format!("expected {lit:?} at byte {}", self.pos)))
        }
    }

    fn until(&mut self, stop: u8) -> Result<&str> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos] != stop {
            self.pos += 1;
        }
        if self.pos == self.s.len() {
            return Err(Error::Data(format!("unterminated token at byte {start}")));
        }
        std::str::from_utf8(&self.s[start..self.pos]).map_err(|e| Error::Data(e.to_string()))
    }

    fn node(&mut self) -> Result<TreeNode> {
        match self.s.get(self.pos) {
            Some(b'[') => {
                self.expect("[p=")?;
                let v: f64 = self
                    .until(b']')?
                    .parse()
                    .map_err(|e| Error::Data(format!("bad leaf value: {e}")))?;
                self.expect("]")?;
                Ok(TreeNode::Leaf(v))
            }
            Some(b'(') => {
                self.expect("(x")?;
                let coord: usize = self
                    .until(b' ')?
                    .parse()
                    .map_err(|e| Error::Data(format!("bad coordinate: {e}")))?;
                self.expect(" ")?;
                let zero = self.node()?;
                self.expect(" ")?;
                let one = self.node()?;
                self.expect(")")?;
                Ok(TreeNode::split(coord, zero, one))
            }
            _ => Err(Error::Data(format!("unexpected input at byte {}", self.pos))),
        }
    }
}

/// Anything whose pmf over `{0,1}^d` can be evaluated exactly.
pub trait ExactPmf {
    fn dim(&self) -> usize;
    fn pmf(&self, x: &BitVector) -> f64;
}

impl ExactPmf for DecisionTreeDistribution {
    fn dim(&self) -> usize {
        self.d
    }
    fn pmf(&self, x: &BitVector) -> f64 {
        DecisionTreeDistribution::pmf(self, x)
    }
}

impl ExactPmf for ProductDistribution {
    fn dim(&self) -> usize {
        ProductDistribution::dim(self)
    }
    fn pmf(&self, x: &BitVector) -> f64 {
        ProductDistribution::pmf(self, x)
    }
}

/// `pmf(from_index(j))` for every `j < 2^d`.
pub fn pmf_table(dist: &dyn ExactPmf) -> Result<Vec<f64>> {
    let d = dist.dim();
    if d > 24 {
        return Err(Error::Parameter(format!("cannot enumerate dimension {d}")));
    }
    Ok((0..(1u64 << d))
        .map(|j| dist.pmf(&BitVector::from_index(j, d)))
        .collect())
}

/// Exact total variation distance by enumeration.
pub fn tv_exact(a: &dyn ExactPmf, b: &dyn ExactPmf) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Parameter(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let (ta, tb) = (pmf_table(a)?, pmf_table(b)?);
    Ok(0.5 * ta.iter().zip(&tb).map(|(p, q)| (p - q).abs()).sum::<f64>())
}

/// Exact restricted influence `½·E_{x∼U}|f(x_π) − f((x^{~i})_π)|` with `f = 2^d·D`.
pub fn influence_oracle(dist: &dyn ExactPmf, pi: &Restriction, i: usize) -> Result<f64> {
    let d = dist.dim();
    if d > 20 {
        return Err(Error::Parameter(format!("cannot enumerate dimension {d}")));
    }
    if i >= d {
        return Err(Error::Domain(format!("coordinate {i} outside dimension {d}")));
    }
    if pi.contains(i) {
        return Err(Error::Domain(format!("coordinate {i} is fixed by [{pi}]")));
    }
    let table = pmf_table(dist)?;
    Ok(influence_from_table(&table, d, pi, i))
}

fn influence_from_table(table: &[f64], d: usize, pi: &Restriction, i: usize) -> f64 {
    let scale = 2f64.powi(d as i32);
    let mut total = 0.0;
    for j in 0..(1u64 << d) {
        let x = pi.apply(&BitVector::from_index(j, d));
        let y = x.flipped(i);
        total += (table[x.to_index() as usize] - table[y.to_index() as usize]).abs() * scale;
    }
    0.5 * total / (1u64 << d) as f64
}

/// Sum of the exact influences of all coordinates, unrestricted.
pub fn total_influence_exact(dist: &dyn ExactPmf) -> Result<f64> {
    let d = dist.dim();
    let table = pmf_table(dist)?;
    Ok((0..d)
        .map(|i| influence_from_table(&table, d, &Restriction::empty(), i))
        .sum())
}

fn scale_of(pi: &Restriction) -> f64 {
    2f64.powi(pi.len() as i32)
}

/// Samples needed by the monotone estimator at restriction size `pi_len`.
pub fn monotone_sample_size(pi_len: usize, alpha: f64, rho: f64, beta: f64) -> u128 {
    let width = 2f64.powi(pi_len as i32 + 1);
    mean_sample_size(width, alpha * rho / 4.0, beta)
}

/// Monotone estimator from an existing plain sample.
pub fn monotone_influence_from(
    samples: &Dataset,
    pi: &Restriction,
    i: usize,
    alpha: f64,
    beta: f64,
    rho: f64,
    stream: &SeedStream,
) -> Result<f64> {
    if pi.contains(i) || i >= samples.dim() {
        return Err(Error::Domain(format!("coordinate {i} unavailable under [{pi}]")));
    }
    let scale = scale_of(pi);
    let mut sum = 0.0;
    for (e, c) in samples.entries() {
        if pi.satisfied_by(&e.x) {
            let sign = if e.x.get(i) { 1.0 } else { -1.0 };
            sum += sign * scale * *c as f64;
        }
    }
    r_mean_from_sum(
        sum,
        samples.total(),
        (-scale, scale),
        alpha * rho / 4.0,
        rho,
        beta,
        stream,
    )
}

/// Replicable restricted influence for monotone distributions, from plain samples.
#[allow(clippy::too_many_arguments)]
pub fn r_infl_est_monotone(
    source: &mut dyn SampleOracle,
    pi: &Restriction,
    i: usize,
    alpha: f64,
    beta: f64,
    rho: f64,
    shared: &SeedStream,
    data: &mut SeedStream,
) -> Result<f64> {
    check_unit_open("alpha", alpha)?;
    check_unit_open("beta", beta)?;
    check_unit_open("rho", rho)?;
    let n = monotone_sample_size(pi.len(), alpha, rho, beta);
    let samples = source.draw_many(n, data)?;
    monotone_influence_from(&samples, pi, i, alpha, beta, rho, shared)
}

/// Replicable estimate of `p_π = 2^{|π|}·Pr[x ⊨ π]` to accuracy `alpha`.
pub fn r_leaf_estimate(
    source: &mut dyn SampleOracle,
    pi: &Restriction,
    alpha: f64,
    beta: f64,
    rho: f64,
    shared: &SeedStream,
    data: &mut SeedStream,
) -> Result<f64> {
    let scale = scale_of(pi);
    let n = mean_sample_size(scale, alpha * rho / 4.0, beta);
    let hits = source.draw_count(n, &|e| pi.satisfied_by(&e.x), data)?;
    r_mean_from_sum(hits as f64 * scale, n, (0.0, scale), alpha * rho / 4.0, rho, beta, shared)
}

fn leaf_estimate_from(
    samples: &Dataset,
    pi: &Restriction,
    alpha: f64,
    beta: f64,
    rho: f64,
    stream: &SeedStream,
) -> Result<f64> {
    let scale = scale_of(pi);
    let hits = samples.count_where(|e| pi.satisfied_by(&e.x));
    r_mean_from_sum(
        hits as f64 * scale,
        samples.total(),
        (0.0, scale),
        alpha * rho / 4.0,
        rho,
        beta,
        stream,
    )
}

/// Replicable restricted influence from a subcube conditional oracle.
///
/// For each outer draw `x ∼ D_π` the pair `{x, x^{~i}}` is sampled `⌈4/a²⌉`
/// times and `q = |2p − 1|` recorded; the rounded mean of `q` is the influence
/// of the conditional distribution, which is rescaled by a replicable estimate
/// of `p_π` (exactly 1 when `π` is empty).
#[allow(clippy::too_many_arguments)]
pub fn r_infl_est_subcube(
    oracle: &mut dyn ConditionalSampleOracle,
    pi: &Restriction,
    i: usize,
    alpha: f64,
    beta: f64,
    rho: f64,
    shared: &SeedStream,
    data: &mut SeedStream,
) -> Result<f64> {
    check_unit_open("alpha", alpha)?;
    check_unit_open("beta", beta)?;
    check_unit_open("rho", rho)?;
    let d = oracle.dim();
    if pi.contains(i) || i >= d {
        return Err(Error::Domain(format!("coordinate {i} unavailable under [{pi}]")));
    }
    let (p_hat, q_acc, q_rho, q_beta) = if pi.is_empty() {
        (1.0, alpha, rho, beta)
    } else {
        let p = r_leaf_estimate(
            oracle,
            pi,
            alpha / 2.0,
            beta / 2.0,
            rho / 2.0,
            &shared.derive("mass"),
            data,
        )?;
        let a_q = alpha / (2.0 * scale_of(pi) + alpha);
        (p, a_q, rho / 2.0, beta / 2.0)
    };
    let inner = (4.0 / (q_acc * q_acc)).ceil() as u128;
    let raw = (q_acc / 2.0) * q_rho / 4.0;
    let outer = mean_sample_size(1.0, raw, q_beta);
    if outer > MAX_SUBCUBE_DRAWS {
        return Err(Error::BudgetExhausted {
            restriction: pi.key(),
            detail: format!("{outer} outer draws exceed the cap of {MAX_SUBCUBE_DRAWS}"),
        });
    }
    let conditional = oracle.condition(pi)?;
    let mut conditional = conditional;
    let draws = conditional.draw_many(outer, data)?;
    let mut q_sum = 0.0;
    for (e, c) in draws.entries() {
        let mut pair = pi.clone();
        for j in (0..d).filter(|&j| j != i && !pi.contains(j)) {
            pair = pair.with(j, e.x.get(j))?;
        }
        let mut pair_oracle = oracle.condition(&pair)?;
        let target = e.x.get(i);
        for _ in 0..*c {
            let hits = pair_oracle.draw_count(inner, &|s| s.x.get(i) == target, data)?;
            let p = hits as f64 / inner as f64;
            q_sum += (2.0 * p - 1.0).abs();
        }
    }
    let q_hat = r_mean_from_sum(q_sum, outer, (0.0, 1.0), raw, q_rho, q_beta, &shared.derive("q"))?;
    Ok(p_hat * q_hat)
}

/// How [`r_build_dt`] reaches the data.
pub enum TreeSource<'a> {
    /// Plain samples from a monotone distribution.
    Monotone(&'a mut dyn SampleOracle),
    /// A subcube conditional oracle for an arbitrary distribution.
    Conditional(&'a mut dyn ConditionalSampleOracle),
}

/// `τ = α/(8ℓ²)`.
pub fn influence_threshold(alpha: f64, depth: usize) -> f64 {
    alpha / (8.0 * (depth.max(1) * depth.max(1)) as f64)
}

/// Number of distinct restrictions of size at most `depth` over `d` coordinates.
pub fn restriction_count(d: usize, depth: usize) -> u128 {
    let mut total = 0u128;
    let mut binom = 1u128;
    for j in 0..=depth.min(d) {
        total = total.saturating_add(binom.saturating_mul(1u128 << j));
        binom = binom * (d - j) as u128 / (j + 1) as u128;
    }
    total
}

struct Plan {
    d: usize,
    tau: f64,
    infl_acc: f64,
    rho_infl: f64,
    beta_infl: f64,
    leaf_acc: f64,
    rho_leaf: f64,
    beta_leaf: f64,
}

enum Estimator<'a, 'b> {
    Plain(Dataset),
    Conditional {
        oracle: &'a mut dyn ConditionalSampleOracle,
        data: &'b mut SeedStream,
    },
}

struct Builder<'a, 'b> {
    plan: Plan,
    est: Estimator<'a, 'b>,
    shared: SeedStream,
    infl: HashMap<(Restriction, usize), f64>,
    leaf: HashMap<Restriction, f64>,
    trees: HashMap<Restriction, (TreeNode, f64)>,
}

impl Builder<'_, '_> {
    fn influence(&mut self, pi: &Restriction, i: usize) -> Result<f64> {
        if let Some(v) = self.infl.get(&(pi.clone(), i)) {
            return Ok(*v);
        }
        let stream = self.shared.derive("infl").derive(&pi.key()).derive(&format!("x{i}"));
        let p = &self.plan;
        let v = match &mut self.est {
            Estimator::Plain(ds) => {
                monotone_influence_from(ds, pi, i, p.infl_acc, p.beta_infl, p.rho_infl, &stream)?
            }
            Estimator::Conditional { oracle, data } => r_infl_est_subcube(
                *oracle, pi, i, p.infl_acc, p.beta_infl, p.rho_infl, &stream, data,
            )?,
        };
        self.infl.insert((pi.clone(), i), v);
        Ok(v)
    }

    fn leaf_value(&mut self, pi: &Restriction) -> Result<f64> {
        if let Some(v) = self.leaf.get(pi) {
            return Ok(*v);
        }
        let stream = self.shared.derive("leaf").derive(&pi.key());
        let p = &self.plan;
        let v = match &mut self.est {
            Estimator::Plain(ds) => leaf_estimate_from(ds, pi, p.leaf_acc, p.beta_leaf, p.rho_leaf, &stream)?,
            Estimator::Conditional { oracle, data } => r_leaf_estimate(
                *oracle, pi, p.leaf_acc, p.beta_leaf, p.rho_leaf, &stream, data,
            )?,
        };
        self.leaf.insert(pi.clone(), v);
        Ok(v)
    }

    /// Estimated total influence `g(π)`.
    fn total_influence(&mut self, pi: &Restriction) -> Result<f64> {
        let mut g = 0.0;
        for i in (0..self.plan.d).filter(|&i| !pi.contains(i)) {
            g += self.influence(pi, i)?;
        }
        Ok(g)
    }

    /// Subtree for `π` with its leaf-weighted score `Σ_t 2^{-|t|}·g(t)`.
    fn build(&mut self, pi: &Restriction, depth_left: usize) -> Result<(TreeNode, f64)> {
        if let Some(t) = self.trees.get(pi) {
            return Ok(t.clone());
        }
        let mut candidates = Vec::new();
        if depth_left > 0 {
            for i in (0..self.plan.d).filter(|&i| !pi.contains(i)) {
                if self.influence(pi, i)? >= 0.75 * self.plan.tau {
                    candidates.push(i);
                }
            }
        }
        let result = if candidates.is_empty() {
            let value = self.leaf_value(pi)?;
            let score = self.total_influence(pi)? * 0.5f64.powi(pi.len() as i32);
            (TreeNode::Leaf(value), score)
        } else {
            let mut best: Option<(TreeNode, f64)> = None;
            for i in candidates {
                let (zero, s0) = self.build(&pi.with(i, false)?, depth_left - 1)?;
                let (one, s1) = self.build(&pi.with(i, true)?, depth_left - 1)?;
                let score = s0 + s1;
                if best.as_ref().is_none_or(|(_, b)| score < *b) {
                    best = Some((TreeNode::split(i, zero, one), score));
                }
            }
            best.expect("non-empty candidate set")
        };
        self.trees.insert(pi.clone(), result.clone());
        Ok(result)
    }
}

/// Replicable depth-`depth` tree learner.
///
/// Budgets are split evenly over every restriction of size at most `depth`,
/// which bounds the distinct estimates the memoized recursion can make: half
/// of `rho` and `beta` for influences (`d` per restriction), half for leaves.
#[allow(clippy::too_many_arguments)]
pub fn r_build_dt(
    source: TreeSource<'_>,
    depth: usize,
    alpha: f64,
    beta: f64,
    rho: f64,
    shared: &SeedStream,
    data: &mut SeedStream,
) -> Result<DecisionTreeDistribution> {
    check_unit_open("alpha", alpha)?;
    check_unit_open("beta", beta)?;
    check_unit_open("rho", rho)?;
    if beta >= rho / 3.0 {
        return Err(Error::Parameter(format!("confidence {beta} must be below rho/3 = {}", rho / 3.0)));
    }
    let d = match &source {
        TreeSource::Monotone(s) => s.dim(),
        TreeSource::Conditional(s) => s.dim(),
    };
    let depth = depth.min(d);
    let r = restriction_count(d, depth);
    if r > MAX_RESTRICTIONS {
        return Err(Error::BudgetExhausted {
            restriction: Restriction::empty().key(),
            detail: format!("{r} restrictions exceed the cap of {MAX_RESTRICTIONS}"),
        });
    }
    let r = r as f64;
    let tau = influence_threshold(alpha, depth);
    let plan = Plan {
        d,
        tau,
        infl_acc: (tau / 4.0).min(alpha / (2.0 * d.max(1) as f64)),
        rho_infl: rho / (2.0 * d.max(1) as f64 * r),
        beta_infl: beta / (2.0 * d.max(1) as f64 * r),
        leaf_acc: alpha / 2.0,
        rho_leaf: rho / (2.0 * r),
        beta_leaf: beta / (2.0 * r),
    };
    let est = match source {
        TreeSource::Monotone(oracle) => {
            let n_infl = monotone_sample_size(depth, plan.infl_acc, plan.rho_infl, plan.beta_infl);
            let n_leaf = mean_sample_size(
                2f64.powi(depth as i32),
                plan.leaf_acc * plan.rho_leaf / 4.0,
                plan.beta_leaf,
            );
            let n = n_infl.max(n_leaf);
            if n > u128::MAX / 4 {
                return Err(Error::BudgetExhausted {
                    restriction: Restriction::empty().key(),
                    detail: format!("sample size {n} out of range"),
                });
            }
            Estimator::Plain(oracle.draw_many(n, data)?)
        }
        TreeSource::Conditional(oracle) => Estimator::Conditional { oracle, data },
    };
    let mut builder = Builder {
        plan,
        est,
        shared: shared.derive("build-dt"),
        infl: HashMap::new(),
        leaf: HashMap::new(),
        trees: HashMap::new(),
    };
    let (root, _) = builder.build(&Restriction::empty(), depth)?;
    Ok(DecisionTreeDistribution::new(d, root)?.renormalized())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn biased_first(d: usize) -> DecisionTreeDistribution {
        DecisionTreeDistribution::new(d, TreeNode::split(0, TreeNode::Leaf(0.5), TreeNode::Leaf(1.5)))
            .unwrap()
    }

    #[test]
    fn serialization_roundtrip() {
        let t = DecisionTreeDistribution::new(
            3,
            TreeNode::split(
                2,
                TreeNode::Leaf(0.25),
                TreeNode::split(0, TreeNode::Leaf(1.0), TreeNode::Leaf(2.75)),
            ),
        )
        .unwrap();
        let s = t.serialize();
        assert_eq!(s, "(x2 [p=0.25] (x0 [p=1] [p=2.75]))");
        assert_eq!(DecisionTreeDistribution::parse(3, &s).unwrap(), t);
        assert!(DecisionTreeDistribution::parse(3, "(x2 [p=1]").is_err());
    }

    #[test]
    fn repeated_coordinate_rejected() {
        let bad = TreeNode::split(0, TreeNode::Leaf(1.0), TreeNode::split(0, TreeNode::Leaf(1.0), TreeNode::Leaf(1.0)));
        assert!(DecisionTreeDistribution::new(2, bad).is_err());
        assert!(DecisionTreeDistribution::new(1, TreeNode::split(1, TreeNode::Leaf(1.0), TreeNode::Leaf(1.0))).is_err());
    }

    #[test]
    fn tv_of_point_mass_against_uniform() {
        let point = DecisionTreeDistribution::new(
            2,
            TreeNode::split(
                0,
                TreeNode::Leaf(0.0),
                TreeNode::split(1, TreeNode::Leaf(0.0), TreeNode::Leaf(4.0)),
            ),
        )
        .unwrap();
        let u = DecisionTreeDistribution::uniform(2);
        assert!((tv_exact(&u, &point).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(tv_exact(&u, &u).unwrap(), 0.0);
        assert!(tv_exact(&u, &DecisionTreeDistribution::uniform(3)).is_err());
    }

    #[test]
    fn influence_examples() {
        let t = biased_first(1);
        assert!((influence_oracle(&t, &Restriction::empty(), 0).unwrap() - 0.5).abs() < 1e-12);
        let point = DecisionTreeDistribution::new(1, TreeNode::split(0, TreeNode::Leaf(0.0), TreeNode::Leaf(2.0))).unwrap();
        assert!((influence_oracle(&point, &Restriction::empty(), 0).unwrap() - 1.0).abs() < 1e-12);
        let pi = Restriction::from_pairs(&[(0, true)]).unwrap();
        assert!(influence_oracle(&t, &pi, 0).is_err());
    }

    #[test]
    fn leaf_of_matches_leaves_order() {
        let t = DecisionTreeDistribution::new(
            3,
            TreeNode::split(1, TreeNode::split(2, TreeNode::Leaf(1.0), TreeNode::Leaf(1.0)), TreeNode::Leaf(1.0)),
        )
        .unwrap();
        let leaves = t.leaves();
        for j in 0..8u64 {
            let x = BitVector::from_index(j, 3);
            let (k, pi) = t.leaf_of(&x);
            assert_eq!(leaves[k].0, pi);
            assert!(pi.satisfied_by(&x));
        }
    }

    #[test]
    fn restriction_counts() {
        assert_eq!(restriction_count(6, 2), 1 + 12 + 60);
        assert_eq!(restriction_count(3, 5), 27);
        assert!((influence_threshold(0.2, 2) - 0.00625).abs() < 1e-15);
    }

    #[test]
    fn renormalize_clips_and_scales() {
        let t = DecisionTreeDistribution::new(1, TreeNode::split(0, TreeNode::Leaf(1.0), TreeNode::Leaf(3.0))).unwrap();
        let n = t.renormalized();
        assert!(n.is_normalized());
        assert_eq!(n.leaves()[1].1, 1.5);
    }
}
