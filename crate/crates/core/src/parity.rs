//! GF(2) elimination and affine-parity learners.

use crate::bits::BitVector;
use crate::data::{Dataset, FiniteDistribution, SampleOracle};
use crate::error::{check_unit_open, Error, Result};
use crate::hypothesis::Hypothesis;
use crate::seedstream::SeedStream;

/// Linear equations `a·w = c` over GF(2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf2System {
    dim: usize,
    rows: Vec<(BitVector, bool)>,
}

impl Gf2System {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: Vec::new(),
        }
    }

    pub fn from_rows(dim: usize, rows: Vec<(BitVector, bool)>) -> Result<Self> {
        let mut s = Self::new(dim);
        for (a, c) in rows {
            s.push(a, c)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, coeffs: BitVector, rhs: bool) -> Result<()> {
        if coeffs.len() != self.dim {
            return Err(Error::Data(format!(
                "equation of dimension {} in a system of dimension {}",
                coeffs.len(),
                self.dim
            )));
        }
        self.rows.push((coeffs, rhs));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[(BitVector, bool)] {
        &self.rows
    }
}

/// Reduced row echelon form of a consistent system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf2Solution {
    /// The particular solution with every free variable set to zero.
    pub solution: BitVector,
    pub free_vars: Vec<usize>,
    /// `(pivot column, augmented row)` pairs of the reduced system.
    pivots: Vec<(usize, BitVector)>,
}

impl Gf2Solution {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// The solution obtained by setting `free_vars[k] = values[k]`.
    pub fn with_free(&self, values: &BitVector) -> BitVector {
        assert_eq!(values.len(), self.free_vars.len());
        let dim = self.solution.len();
        let mut w = BitVector::zeros(dim);
        for (k, &j) in self.free_vars.iter().enumerate() {
            w.set(j, values.get(k));
        }
        for (p, row) in &self.pivots {
            let mut v = row.get(dim);
            for &j in &self.free_vars {
                if row.get(j) && w.get(j) {
                    v = !v;
                }
            }
            w.set(*p, v);
        }
        w
    }
}

/// Row-reduces `system` with word-parallel XOR.
pub fn gaussian_solve(system: &Gf2System) -> Result<Gf2Solution> {
    if system.rows.is_empty() {
        return Err(Error::Parameter("empty linear system".into()));
    }
    let dim = system.dim;
    let mut rows: Vec<BitVector> = system
        .rows
        .iter()
        .map(|(a, c)| a.push(*c))
        .collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut next = 0;
    for col in 0..dim {
        let Some(found) = (next..rows.len()).find(|&r| rows[r].get(col)) else {
            continue;
        };
        rows.swap(next, found);
        let pivot_row = rows[next].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != next && row.get(col) {
                row.xor_assign(&pivot_row);
            }
        }
        pivots.push(col);
        next += 1;
        if next == rows.len() {
            break;
        }
    }
    if rows[next..].iter().any(|r| r.get(dim)) {
        return Err(Error::Inconsistent);
    }
    let mut solution = BitVector::zeros(dim);
    for (k, &p) in pivots.iter().enumerate() {
        solution.set(p, rows[k].get(dim));
    }
    let free_vars = (0..dim).filter(|c| !pivots.contains(c)).collect();
    let pivots = pivots.into_iter().zip(rows).collect();
    Ok(Gf2Solution {
        solution,
        free_vars,
        pivots,
    })
}

fn split_affine(v: &BitVector) -> Hypothesis {
    let d = v.len() - 1;
    Hypothesis::AffineParity {
        w: v.slice(0, d),
        b: v.get(d),
    }
}

/// Gaussian elimination over the unknowns `(w, b)`, guessing free variables
/// with bits from `guesses`.
///
/// Any stream works; the non-replicability experiment hands it a per-execution
/// stream so that underdetermined coordinates are genuine guesses.
pub fn naive_parity_learner(samples: &Dataset, guesses: &mut SeedStream) -> Result<Hypothesis> {
    let d = samples.dim();
    let mut sys = Gf2System::new(d + 1);
    for (e, _) in samples.entries() {
        sys.push(e.x.push(true), e.y)?;
    }
    let sol = gaussian_solve(&sys)?;
    let fill = guesses.random_bits(sol.free_vars.len());
    Ok(split_affine(&sol.with_free(&fill)))
}

/// Draws collected by [`r_aff_parity`] before it gives up.
pub fn aff_parity_budget(d: usize, rho: f64, beta: f64) -> u64 {
    let d = d.max(1) as f64;
    (4.0 * d * (4.0 * d / (rho * beta)).ln()).ceil() as u64
}

/// Replicable exact learner for affine parities under uniform marginals.
///
/// Learns `w` from offsets `x + x⁰` against a first draw `x⁰`, then recovers
/// `b = f(x⁰) + w·x⁰`. The output is unique whenever it succeeds, which is what
/// makes it replicable; the shared stream is only used for accounting.
pub fn r_aff_parity(
    source: &mut dyn SampleOracle,
    beta: f64,
    rho: f64,
    shared: &SeedStream,
    data: &mut SeedStream,
) -> Result<Hypothesis> {
    check_unit_open("beta", beta)?;
    check_unit_open("rho", rho)?;
    let d = source.dim();
    let anchor = source.draw(data)?;
    if d == 0 {
        return Ok(Hypothesis::AffineParity {
            w: BitVector::zeros(0),
            b: anchor.y,
        });
    }
    let budget = aff_parity_budget(d, rho, beta);
    let pool = source.draw_many(budget as u128, data)?;
    let mut sys = Gf2System::new(d);
    for (e, _) in pool.entries() {
        sys.push(e.x.xor(&anchor.x), e.y ^ anchor.y)?;
    }
    let sol = gaussian_solve(&sys)?;
    if sol.rank() < d {
        return Err(Error::InsufficientRank {
            rank: sol.rank(),
            needed: d,
            draws: budget,
        });
    }
    let w = sol.solution;
    let b = anchor.y ^ w.dot(&anchor.x);
    shared.charge(rho);
    Ok(Hypothesis::AffineParity { w, b })
}

/// Restriction `x_i = bit` of the affine parity `(w, b)`, again an affine parity.
pub fn restrict_affine(w: &BitVector, b: bool, i: usize, bit: bool) -> (BitVector, bool) {
    let mut w2 = w.clone();
    w2.set(i, false);
    (w2, b ^ (w.get(i) && bit))
}

/// Independent coordinates with `Pr[x_i = 1] = p_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDistribution {
    p: Vec<f64>,
}

impl ProductDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Parameter(format!("coordinate probability {bad} outside [0, 1]")));
        }
        Ok(Self { p })
    }

    pub fn uniform(d: usize) -> Self {
        Self { p: vec![0.5; d] }
    }

    /// Uniform on the first `d - 1` coordinates, `Pr[x_d = 1] = (1/2)^{1/n}`, so
    /// that `n` draws all have `x_d = 1` with probability exactly one half.
    pub fn hard_instance(d: usize, n: u64) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::Parameter("hard instance needs d ≥ 1 and n ≥ 1".into()));
        }
        let mut p = vec![0.5; d];
        p[d - 1] = 0.5f64.powf(1.0 / n as f64);
        Ok(Self { p })
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn is_monotone(&self) -> bool {
        self.p.iter().all(|&v| v >= 0.5)
    }

    pub fn pmf(&self, x: &BitVector) -> f64 {
        self.p
            .iter()
            .enumerate()
            .map(|(i, &pi)| if x.get(i) { pi } else { 1.0 - pi })
            .product()
    }

    /// The labeled distribution `(x, target(x))`, enumerated exactly.
    pub fn labeled(&self, target: &Hypothesis) -> Result<FiniteDistribution> {
        FiniteDistribution::from_pmf(self.dim(), |x| self.pmf(x), |x| target.eval(x))
    }
}
