//! One-way sequences over a SHA-256 hash chain, and their replicable learner.
//!
//! An input `x ∈ {0,1}^d` is read as `(i, σ)`: the first `k = ⌊√d⌋ − 1` bits
//! hold `i − 1` most-significant-bit first, the remaining `d − k` bits hold `σ`.
//! The concept `c_s` accepts `(i, σ)` iff `σ = σ_i` and `b_i = 1`, where
//! `σ_1 = H(s ∥ "init")`, `σ_{i+1} = H(σ_i)` and `b_i` is the low bit of
//! `H(σ_i ∥ "label")`, each truncated to `d − k` bits.

use sha2::{Digest, Sha256};

use crate::bits::BitVector;
use crate::data::{Dataset, FiniteDistribution, LabeledExample};
use crate::error::{check_unit_open, Error, Result};
use crate::hypothesis::Hypothesis;
use crate::rquantile::{r_quantile_est, EmpiricalCdf};
use crate::rstat::r_round_one;
use crate::seedstream::SeedStream;

/// Largest index width for which the full chain is materialized.
const MAX_K: usize = 20;

pub fn index_width(d: usize) -> usize {
    ((d as f64).sqrt().floor() as usize).saturating_sub(1)
}

/// First `bits` bits of the extendable hash: `SHA256(input)`, then
/// `SHA256(input ∥ j)` for block `j ≥ 1`.
fn hash_bits(input: &[u8], bits: usize) -> BitVector {
    let mut out = Vec::with_capacity(bits.div_ceil(8));
    let mut block = 0u64;
    while out.len() * 8 < bits {
        let mut h = Sha256::new();
        h.update(input);
        if block > 0 {
            h.update(block.to_le_bytes());
        }
        out.extend_from_slice(&h.finalize());
        block += 1;
    }
    BitVector::from_bytes(&out, bits).expect("enough hash output")
}

fn next_sigma(sigma: &BitVector) -> BitVector {
    hash_bits(&sigma.to_bytes(), sigma.len())
}

fn label_of(sigma: &BitVector) -> bool {
    let mut h = Sha256::new();
    h.update(sigma.to_bytes());
    h.update(b"label");
    let digest: [u8; 32] = h.finalize().into();
    digest[31] & 1 == 1
}

/// `(σ_j, b_j)` from `(i, σ_i)` by `j − i` forward hash steps.
pub fn compute_forward(j: u64, i: u64, sigma_i: &BitVector) -> Result<(BitVector, bool)> {
    if j < i {
        return Err(Error::Domain(format!(
            "reverse computation refused: target index {j} precedes known index {i}"
        )));
    }
    let mut sigma = sigma_i.clone();
    for _ in i..j {
        sigma = next_sigma(&sigma);
    }
    let b = label_of(&sigma);
    Ok((sigma, b))
}

/// The concept `c_s` with its chain materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct OwsConcept {
    d: usize,
    k: usize,
    seed: BitVector,
    chain: Vec<(BitVector, bool)>,
}

impl OwsConcept {
    pub fn new(seed: BitVector, d: usize) -> Result<Self> {
        if d < 9 {
            return Err(Error::Parameter(format!("dimension {d} below 9")));
        }
        let k = index_width(d);
        if seed.len() != k {
            return Err(Error::Parameter(format!(
                "seed has {} bits, expected k = {k}",
                seed.len()
            )));
        }
        if k > MAX_K {
            return Err(Error::Parameter(format!("index width {k} above {MAX_K}")));
        }
        let mut input = seed.to_bytes();
        input.extend_from_slice(b"init");
        let mut sigma = hash_bits(&input, d - k);
        let mut chain = Vec::with_capacity(1 << k);
        for _ in 0..(1u64 << k) {
            chain.push((sigma.clone(), label_of(&sigma)));
            sigma = next_sigma(&sigma);
        }
        Ok(Self { d, k, seed, chain })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> &BitVector {
        &self.seed
    }

    pub fn len(&self) -> u64 {
        1 << self.k
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(σ_i, b_i)` for `i ∈ 1..=2^k`.
    pub fn chain(&self, i: u64) -> &(BitVector, bool) {
        &self.chain[(i - 1) as usize]
    }

    pub fn encode(&self, i: u64, sigma: &BitVector) -> BitVector {
        encode(self.k, i, sigma)
    }

    pub fn label(&self, x: &BitVector) -> bool {
        let (i, sigma) = decode(self.k, x);
        let (s, b) = self.chain(i);
        *b && *s == sigma
    }

    /// Uniform over the on-chain points `(i, σ_i)`, optionally only those with `b_i = 1`.
    pub fn chain_distribution(&self, positives_only: bool) -> Result<FiniteDistribution> {
        let support: Vec<LabeledExample> = (1..=self.len())
            .filter(|&i| !positives_only || self.chain(i).1)
            .map(|i| {
                let (s, b) = self.chain(i);
                LabeledExample::new(self.encode(i, s), *b)
            })
            .collect();
        let w = 1.0 / support.len() as f64;
        let n = support.len();
        FiniteDistribution::new(self.d, support, vec![w; n])
    }
}

pub fn encode(k: usize, i: u64, sigma: &BitVector) -> BitVector {
    assert!(i >= 1 && i <= 1 << k, "index {i} outside [1, 2^{k}]");
    let mut head = BitVector::zeros(k);
    for t in 0..k {
        head.set(t, ((i - 1) >> (k - 1 - t)) & 1 == 1);
    }
    head.concat(sigma)
}

pub fn decode(k: usize, x: &BitVector) -> (u64, BitVector) {
    let i = (0..k).fold(0u64, |acc, t| (acc << 1) | x.get(t) as u64) + 1;
    (i, x.slice(k, x.len()))
}

/// The hypothesis returned by [`r_learner_ows`].
#[derive(Debug, Clone, PartialEq)]
pub struct OwsThreshold {
    pub k: usize,
    pub i_star: u64,
    pub sigma_star: BitVector,
    pub b_star: bool,
}

impl OwsThreshold {
    pub fn eval(&self, x: &BitVector) -> bool {
        let (i, sigma) = decode(self.k, x);
        if i < self.i_star {
            return false;
        }
        if i == self.i_star {
            return self.b_star && sigma == self.sigma_star;
        }
        let (s, b) = compute_forward(i, self.i_star, &self.sigma_star).expect("forward index");
        b && s == sigma
    }

    pub fn canonical(&self) -> String {
        format!(
            "OWS;i*={};sigma*={};b*={}",
            self.i_star,
            self.sigma_star.to_hex(),
            self.b_star as u8
        )
    }
}

/// Minimum sample size for the learner.
pub fn ows_sample_size(k: usize, alpha: f64, rho: f64, beta: f64) -> f64 {
    let l = (6.0 / beta).ln();
    let k = k as f64;
    (392.0 / (alpha * alpha * rho * rho) * l)
        .max(9216.0 * k * k / (alpha.powi(3) * rho * rho) * l)
        .max(32.0 / (alpha * alpha) * l)
}

/// Replicable PAC learner for one-way sequences.
///
/// Fails with [`Error::OwsFailure`] when the smallest positive index lies
/// strictly above the replicable quantile `i*`; when it equals `i*` the string
/// and label at `i*` are read off directly.
pub fn r_learner_ows(
    samples: &Dataset,
    alpha: f64,
    rho: f64,
    beta: f64,
    stream: &SeedStream,
) -> Result<Hypothesis> {
    check_unit_open("alpha", alpha)?;
    check_unit_open("rho", rho)?;
    check_unit_open("beta", beta)?;
    let d = samples.dim();
    if d < 9 {
        return Err(Error::Parameter(format!("dimension {d} below 9")));
    }
    let k = index_width(d);
    let m = samples.total();
    let needed = ows_sample_size(k, alpha, rho, beta);
    if (m as f64) < needed {
        return Err(Error::Parameter(format!(
            "{m} samples below the required {}",
            needed.ceil()
        )));
    }
    let positives = samples.filter(|e| e.y);
    let p_hat = r_round_one(
        positives.total() as f64 / m as f64,
        rho * alpha / 48.0,
        rho / 3.0,
        &stream.derive("positive-mass"),
    )?;
    if p_hat < alpha / 2.0 {
        return Ok(Hypothesis::AllZero);
    }
    let mut counts = vec![0u128; 1 << k];
    for (e, c) in positives.entries() {
        counts[(decode(k, &e.x).0 - 1) as usize] += c;
    }
    let cdf = EmpiricalCdf::from_counts(&counts)?;
    let i_star = r_quantile_est(
        &cdf,
        alpha / 2.0,
        alpha / 4.0,
        rho / 3.0,
        beta / 3.0,
        &stream.derive("quantile"),
    )?;
    let Some((i1, sigma1)) = positives
        .entries()
        .iter()
        .map(|(e, _)| decode(k, &e.x))
        .min_by_key(|(i, _)| *i)
    else {
        return Err(Error::Data("positive mass estimated without positive samples".into()));
    };
    if i1 > i_star {
        return Err(Error::OwsFailure {
            smallest: i1,
            threshold: i_star,
        });
    }
    let (sigma_star, b_star) = compute_forward(i_star, i1, &sigma1)?;
    Ok(Hypothesis::OwsThreshold(OwsThreshold {
        k,
        i_star,
        sigma_star,
        b_star,
    }))
}
