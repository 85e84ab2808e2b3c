//! Replicable quantiles over `[R] = {1, …, R}` by binary search on a rounded
//! empirical CDF.

use crate::error::{check_unit_open, Error, Result};
use crate::rstat::r_round_one;
use crate::seedstream::SeedStream;

/// Cumulative counts of a sample over `[R]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    support: u64,
    /// `cum[i]` = number of samples `≤ i`, for `i = 0..=R`.
    cum: Vec<u128>,
}

impl EmpiricalCdf {
    pub fn from_samples(samples: &[u64], support: u64) -> Result<Self> {
        let mut counts = vec![0u128; support as usize];
        for &s in samples {
            if s == 0 || s > support {
                return Err(Error::Data(format!("sample {s} outside [1, {support}]")));
            }
            counts[s as usize - 1] += 1;
        }
        Self::from_counts(&counts)
    }

    /// `counts[j]` is the multiplicity of value `j + 1`.
    pub fn from_counts(counts: &[u128]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Parameter("support size must be positive".into()));
        }
        let mut cum = Vec::with_capacity(counts.len() + 1);
        cum.push(0u128);
        for &c in counts {
            cum.push(cum.last().unwrap() + c);
        }
        Ok(Self {
            support: counts.len() as u64,
            cum,
        })
    }

    pub fn support(&self) -> u64 {
        self.support
    }

    pub fn n(&self) -> u128 {
        *self.cum.last().unwrap()
    }

    /// `F_n(i)`; zero below the support and one above it.
    pub fn value(&self, i: u64) -> f64 {
        let n = self.n();
        if n == 0 {
            return 0.0;
        }
        let c = if i >= self.support { n } else { self.cum[i as usize] };
        c as f64 / n as f64
    }
}

/// One comparison of the binary search, reported to an observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileStep {
    pub lo: u64,
    pub hi: u64,
    pub mid: u64,
    pub rounded: f64,
}

/// Samples required for accuracy `alpha` at replicability `rho`, confidence `beta`.
pub fn quantile_sample_size(support: u64, alpha: f64, rho: f64, beta: f64) -> f64 {
    let log_r = padded_log2(support) as f64;
    16.0 * log_r * log_r / (2.0 * alpha * alpha * rho * rho) * (2.0 / beta).ln()
}

fn padded_log2(support: u64) -> u32 {
    support.next_power_of_two().trailing_zeros()
}

/// Replicable `q`-quantile of the sample behind `cdf`.
pub fn r_quantile_est(
    cdf: &EmpiricalCdf,
    q: f64,
    alpha: f64,
    rho: f64,
    beta: f64,
    stream: &SeedStream,
) -> Result<u64> {
    r_quantile_est_observed(cdf, q, alpha, rho, beta, stream, &mut |_| {})
}

/// [`r_quantile_est`] reporting every search step to `observer`.
pub fn r_quantile_est_observed(
    cdf: &EmpiricalCdf,
    q: f64,
    alpha: f64,
    rho: f64,
    beta: f64,
    stream: &SeedStream,
    observer: &mut dyn FnMut(&QuantileStep),
) -> Result<u64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Parameter(format!("quantile level {q} outside [0, 1]")));
    }
    if cdf.n() == 0 {
        return Err(Error::Parameter("empty sample".into()));
    }
    check_unit_open("alpha", alpha)?;
    check_unit_open("rho", rho)?;
    check_unit_open("beta", beta)?;
    let log_r = padded_log2(cdf.support());
    if log_r == 0 {
        return Ok(1);
    }
    let r = 1u64 << log_r;
    let step_alpha = alpha * rho / (4.0 * log_r as f64);
    let step_rho = rho / log_r as f64;
    let (mut lo, mut hi) = (0u64, r);
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        let child = stream.derive(&format!("mid-{mid}"));
        let rounded = r_round_one(cdf.value(mid), step_alpha, step_rho, &child)?;
        observer(&QuantileStep { lo, hi, mid, rounded });
        if rounded >= q {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.min(cdf.support()))
}
