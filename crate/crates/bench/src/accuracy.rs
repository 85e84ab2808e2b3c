//! Population error of a hypothesis.

use replicable::dtdist::ExactPmf;
use replicable::{BitVector, Error, FiniteDistribution, Hypothesis, Result, SampleOracle, SeedStream};

/// Largest support or cube enumerated in exact mode.
pub const MAX_EXACT_POINTS: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMode {
    Exact,
    MonteCarlo { samples: u128 },
}

/// `Pr_{(x,y)∼D}[h(x) ≠ y]`, exactly or from fresh samples drawn with `data`.
pub fn estimate_error(
    h: &Hypothesis,
    population: &FiniteDistribution,
    mode: ErrorMode,
    data: &mut SeedStream,
) -> Result<f64> {
    match mode {
        ErrorMode::Exact => {
            if population.support().len() > MAX_EXACT_POINTS {
                return Err(Error::Parameter(format!(
                    "support of {} points too large for exact evaluation",
                    population.support().len()
                )));
            }
            Ok(population.error_of(h))
        }
        ErrorMode::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(Error::Parameter("Monte Carlo error needs at least one sample".into()));
            }
            let mut pop = population.clone();
            let s = pop.draw_many(samples, data)?;
            Ok(s.empirical_error(h))
        }
    }
}

/// Exact error against `target` under `dist` by enumerating `{0,1}^d`.
pub fn cube_error(h: &Hypothesis, dist: &dyn ExactPmf, target: &dyn Fn(&BitVector) -> bool) -> Result<f64> {
    let d = dist.dim();
    if d > 20 {
        return Err(Error::Parameter(format!("dimension {d} too large for exact evaluation")));
    }
    Ok((0..1u64 << d)
        .map(|j| BitVector::from_index(j, d))
        .filter(|x| h.eval(x) != target(x))
        .map(|x| dist.pmf(&x))
        .sum())
}

/// Marginal of `population` over `{0,1}^d`, indexed by `BitVector::to_index`.
pub fn marginal_table(population: &FiniteDistribution) -> Result<Vec<f64>> {
    let d = population.dim();
    if d > 20 {
        return Err(Error::Parameter(format!("dimension {d} too large for exact evaluation")));
    }
    let mut table = vec![0.0; 1 << d];
    for (e, p) in population.support().iter().zip(population.probs()) {
        table[e.x.to_index() as usize] += p;
    }
    Ok(table)
}
