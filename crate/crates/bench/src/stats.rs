//! Binomial confidence intervals.

use serde::Serialize;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilsonInterval {
    pub lower: f64,
    pub upper: f64,
    pub half_width: f64,
}

impl WilsonInterval {
    pub fn contains(&self, p: f64) -> bool {
        self.lower <= p && p <= self.upper
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64, z: f64) -> WilsonInterval {
    assert!(n > 0 && k <= n, "wilson interval needs 0 <= k <= n, n > 0");
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half_width = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    WilsonInterval {
        lower: if k == 0 { 0.0 } else { (center - half_width).max(0.0) },
        upper: if k == n { 1.0 } else { (center + half_width).min(1.0) },
        half_width,
    }
}
