//! Replicable learning algorithms.
//!
//! Every algorithm here takes a [`SeedStream`] carrying the randomness shared by
//! two executions. Run twice on independent samples with the same stream, a
//! `ρ`-replicable algorithm returns byte-identical output except with
//! probability `ρ`.
//!
//! Sample data comes from [`SampleOracle`] implementations driven by a separate
//! data-channel stream, so the shared and per-execution randomness never mix.

pub mod bits;
pub mod data;
pub mod dp2rep;
pub mod dtdist;
pub mod error;
pub mod hypothesis;
pub mod lift;
pub mod ows;
pub mod parity;
pub mod rquantile;
pub mod rstat;
pub mod seedstream;

pub use bits::BitVector;
pub use data::{
    ConditionalSampleOracle, Dataset, DatasetOracle, FiniteDistribution, LabeledExample,
    Restriction, SampleOracle,
};
pub use error::{Error, Result};
pub use hypothesis::Hypothesis;
pub use seedstream::{BudgetLedger, Channel, SeedStream};
