use thiserror::Error;

/// Errors raised by the replicable learners and their subroutines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input value lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An algorithm parameter (accuracy, budget, dimension, ...) is invalid.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The supplied data is malformed (wrong dimension, category out of range, ...).
    #[error("data error: {0}")]
    Data(String),

    /// A GF(2) system has no solution; the labels are not realizable.
    #[error("inconsistent linear system over GF(2)")]
    Inconsistent,

    /// The affine-parity learner could not collect enough independent offsets.
    #[error("insufficient rank: collected {rank} of {needed} independent offsets in {draws} draws")]
    InsufficientRank { rank: usize, needed: usize, draws: u64 },

    /// The one-way-sequence learner hit its failure branch.
    #[error("FAILURE: smallest positive index {smallest} exceeds threshold {threshold}")]
    OwsFailure { smallest: u64, threshold: u64 },

    /// A sample budget exceeds what the implementation will draw.
    #[error("budget exhausted at restriction [{restriction}]: {detail}")]
    BudgetExhausted { restriction: String, detail: String },

    /// A leaf of the lifting tree received fewer samples than required.
    #[error("leaf [{leaf}] starved: needed {needed} samples, {available} available")]
    LeafStarvation { leaf: String, needed: u128, available: u128 },

    /// The pure-DP transformation would need more candidate draws than allowed.
    #[error("representation-dimension blowup: {needed} candidate draws exceed cap {cap}")]
    RepresentationBlowup { needed: f64, cap: u64 },

    /// Data randomness was requested from a shared (non-data) stream.
    #[error("channel violation: data sampling from stream {0}")]
    ChannelViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit_open(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must lie in (0, 1), got {v}")))
    }
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive, got {v}")))
    }
}
