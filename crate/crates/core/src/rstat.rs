//! Replicable rounding of statistical queries and the estimators built on it.
//!
//! Accuracy parameters passed to [`r_round`] and [`r_mean`] are the *raw*
//! accuracy of the underlying empirical estimate. Rounding with grid width
//! `L = 6α/ρ` then guarantees the rounded value is within `4α/ρ` of the truth
//! whenever the raw estimate is within `α`.

use crate::error::{check_positive, check_unit_open, Error, Result};
use crate::seedstream::SeedStream;

/// A shifted grid of half-open cells `[L0 + kL, L0 + (k+1)L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundingGrid {
    pub width: f64,
    pub offset: f64,
}

impl RoundingGrid {
    /// Grid of width `6α/ρ` with its offset drawn from `stream`.
    pub fn new(alpha: f64, rho: f64, stream: &SeedStream) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_unit_open("rho", rho)?;
        let width = 6.0 * alpha / rho;
        let offset = stream.derive("grid-offset").uniform_unit() * width;
        Ok(Self { width, offset })
    }

    pub fn with_offset(width: f64, offset: f64) -> Self {
        Self { width, offset }
    }

    /// Midpoint of the cell containing `v`.
    pub fn round(&self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return Err(Error::Domain(format!("cannot round non-finite value {v}")));
        }
        let k = ((v - self.offset) / self.width).floor();
        Ok(self.offset + (k + 0.5) * self.width)
    }
}

/// Rounds every value on one shared grid. Each coordinate is `ρ`-replicable.
pub fn r_round(values: &[f64], alpha: f64, rho: f64, stream: &SeedStream) -> Result<Vec<f64>> {
    let grid = RoundingGrid::new(alpha, rho, stream)?;
    let out = values.iter().map(|&v| grid.round(v)).collect::<Result<Vec<_>>>()?;
    stream.charge(rho * values.len() as f64);
    Ok(out)
}

pub fn r_round_one(value: f64, alpha: f64, rho: f64, stream: &SeedStream) -> Result<f64> {
    Ok(r_round(&[value], alpha, rho, stream)?[0])
}

/// Hoeffding sample size for a mean of `[a, b]`-valued samples to raw accuracy `alpha`.
pub fn mean_sample_size(range_width: f64, alpha: f64, beta: f64) -> u128 {
    (range_width * range_width / (2.0 * alpha * alpha) * (2.0 / beta).ln()).ceil() as u128
}

/// Replicable mean of samples in `[a, b]`.
pub fn r_mean(
    samples: &[f64],
    range: (f64, f64),
    alpha: f64,
    rho: f64,
    beta: f64,
    stream: &SeedStream,
) -> Result<f64> {
    let (a, b) = range;
    if let Some(v) = samples.iter().find(|v| !(a..=b).contains(*v)) {
        return Err(Error::Domain(format!("sample {v} outside [{a}, {b}]")));
    }
    let sum: f64 = samples.iter().sum();
    r_mean_from_sum(sum, samples.len() as u128, range, alpha, rho, beta, stream)
}

/// [`r_mean`] given the sum and count of the samples.
pub fn r_mean_from_sum(
    sum: f64,
    n: u128,
    range: (f64, f64),
    alpha: f64,
    rho: f64,
    beta: f64,
    stream: &SeedStream,
) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_unit_open("rho", rho)?;
    check_unit_open("beta", beta)?;
    let (a, b) = range;
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(Error::Parameter(format!("empty range [{a}, {b}]")));
    }
    let needed = mean_sample_size(b - a, alpha, beta);
    if n < needed {
        return Err(Error::Parameter(format!(
            "{n} samples below the required {needed} for accuracy {alpha} at confidence {beta}"
        )));
    }
    r_round_one(sum / n as f64, alpha, rho, stream)
}

/// A probability vector: non-negative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Projects arbitrary reals onto the simplex by clipping negatives and
    /// spreading the residual uniformly, re-clipping until stable.
    pub fn repair(mut v: Vec<f64>) -> Result<ProbVector> {
        if v.is_empty() {
            return Err(Error::Parameter("empty probability vector".into()));
        }
        for p in &mut v {
            *p = p.max(0.0);
        }
        for _ in 0..(4 * v.len() + 8) {
            let residual = 1.0 - v.iter().sum::<f64>();
            if residual.abs() <= 1e-15 {
                break;
            }
            let active: Vec<usize> = if residual > 0.0 {
                (0..v.len()).collect()
            } else {
                (0..v.len()).filter(|&i| v[i] > 0.0).collect()
            };
            let delta = residual / active.len() as f64;
            for i in active {
                v[i] = (v[i] + delta).max(0.0);
            }
        }
        let (top, _) = v
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
        let rest: f64 = v.iter().enumerate().filter(|&(i, _)| i != top).map(|(_, p)| p).sum();
        v[top] = (1.0 - rest).max(0.0);
        Ok(ProbVector(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Samples needed by [`r_finite_distr_est`] over `n_categories` categories.
pub fn finite_distr_sample_size(n_categories: usize, alpha: f64, rho: f64, beta: f64) -> u128 {
    let raw = finite_distr_raw_accuracy(n_categories, alpha, rho);
    mean_sample_size(1.0, raw, beta / n_categories as f64)
}

fn finite_distr_raw_accuracy(n_categories: usize, alpha: f64, rho: f64) -> f64 {
    (alpha / 3.0) * (rho / n_categories as f64) / 4.0
}

/// Replicable estimate of a distribution over `0..n_categories` from category samples.
pub fn r_finite_distr_est(
    samples: &[usize],
    n_categories: usize,
    alpha: f64,
    beta: f64,
    rho: f64,
    stream: &SeedStream,
) -> Result<ProbVector> {
    let mut counts = vec![0u128; n_categories];
    for &s in samples {
        if s >= n_categories {
            return Err(Error::Data(format!(
                "category {s} outside 0..{n_categories}"
            )));
        }
        counts[s] += 1;
    }
    r_finite_distr_est_counts(&counts, alpha, beta, rho, stream)
}

/// [`r_finite_distr_est`] from per-category counts.
pub fn r_finite_distr_est_counts(
    counts: &[u128],
    alpha: f64,
    beta: f64,
    rho: f64,
    stream: &SeedStream,
) -> Result<ProbVector> {
    check_unit_open("alpha", alpha)?;
    check_unit_open("beta", beta)?;
    check_unit_open("rho", rho)?;
    let n_cat = counts.len();
    if n_cat == 0 {
        return Err(Error::Parameter("at least one category required".into()));
    }
    let n: u128 = counts.iter().sum();
    let needed = finite_distr_sample_size(n_cat, alpha, rho, beta);
    if n < needed {
        return Err(Error::Parameter(format!(
            "{n} samples below the required {needed} for {n_cat} categories"
        )));
    }
    let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let raw = finite_distr_raw_accuracy(n_cat, alpha, rho);
    let rounded = r_round(&freqs, raw, rho / n_cat as f64, stream)?;
    ProbVector::repair(rounded)
}
