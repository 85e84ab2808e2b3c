//! Hierarchical deterministic randomness.
//!
//! A [`SeedStream`] is the shared random string handed to both executions of a
//! replicable algorithm. Subroutines never share a stream: each one derives a
//! labeled child, so two executions that agree on the root seed see identical
//! randomness at every named derivation point no matter how much data-dependent
//! work happened before it.
//!
//! Keys are SHA-256 chains over `(channel, root_seed, path)`. Draws come from
//! ChaCha12 keyed by that hash, read in counter order, so every value is
//! reproducible across platforms.

use std::fmt;
use std::sync::{Arc, Mutex};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

use crate::bits::BitVector;
use crate::error::{Error, Result};

/// Which randomness channel a stream belongs to.
///
/// `Shared` streams carry the algorithm's internal randomness and are identical
/// across executions. `Data` streams drive sample oracles and differ per
/// execution. Oracles refuse to draw from a `Shared` stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Shared,
    Data,
}

impl Channel {
    fn tag(self) -> u8 {
        match self {
            Channel::Shared => 0x53,
            Channel::Data => 0x44,
        }
    }
}

/// One replicability charge recorded by an instrumented stream.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetCharge {
    pub path: String,
    pub rho: f64,
}

/// Records every replicability budget spent under a stream it is attached to.
#[derive(Debug, Clone, Default)]
pub struct BudgetLedger {
    charges: Arc<Mutex<Vec<BudgetCharge>>>,
}

impl BudgetLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charges(&self) -> Vec<BudgetCharge> {
        self.charges.lock().expect("ledger poisoned").clone()
    }

    pub fn total(&self) -> f64 {
        self.charges().iter().map(|c| c.rho).sum()
    }

    fn record(&self, path: String, rho: f64) {
        self.charges
            .lock()
            .expect("ledger poisoned")
            .push(BudgetCharge { path, rho });
    }
}

/// A forkable deterministic random stream.
#[derive(Clone)]
pub struct SeedStream {
    channel: Channel,
    root_seed: u64,
    path: Vec<String>,
    key: [u8; 32],
    rng: ChaCha12Rng,
    counter: u64,
    ledger: Option<BudgetLedger>,
}

impl SeedStream {
    /// Root of the shared channel for `root_seed`.
    pub fn new(root_seed: u64) -> Self {
        Self::root(Channel::Shared, root_seed)
    }

    /// Root of the data channel for `root_seed`.
    pub fn data(root_seed: u64) -> Self {
        Self::root(Channel::Data, root_seed)
    }

    fn root(channel: Channel, root_seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"seedstream/v1");
        h.update([channel.tag()]);
        h.update(root_seed.to_le_bytes());
        let key: [u8; 32] = h.finalize().into();
        Self {
            channel,
            root_seed,
            path: Vec::new(),
            key,
            rng: ChaCha12Rng::from_seed(key),
            counter: 0,
            ledger: None,
        }
    }

    /// Child stream for `label`. The parent is not advanced.
    pub fn derive(&self, label: &str) -> SeedStream {
        assert!(!label.is_empty(), "derivation labels must be non-empty");
        let mut h = Sha256::new();
        h.update(self.key);
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
        let key: [u8; 32] = h.finalize().into();
        let mut path = self.path.clone();
        path.push(label.to_owned());
        SeedStream {
            channel: self.channel,
            root_seed: self.root_seed,
            path,
            key,
            rng: ChaCha12Rng::from_seed(key),
            counter: 0,
            ledger: self.ledger.clone(),
        }
    }

    pub fn derive_path<S: AsRef<str>>(&self, labels: &[S]) -> SeedStream {
        labels
            .iter()
            .fold(self.clone(), |s, l| s.derive(l.as_ref()))
    }

    /// Attaches a budget ledger; every descendant stream reports to it.
    pub fn with_ledger(mut self, ledger: &BudgetLedger) -> Self {
        self.ledger = Some(ledger.clone());
        self
    }

    /// Records that a `rho`-replicable step ran under this stream.
    pub fn charge(&self, rho: f64) {
        if let Some(ledger) = &self.ledger {
            ledger.record(self.label(), rho);
        }
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn path(&self) -> &[String] {
        &self.path
    }

    /// Number of 64-bit words drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn key(&self) -> [u8; 32] {
        self.key
    }

    /// `/`-joined derivation path, for diagnostics and ledger entries.
    pub fn label(&self) -> String {
        self.path.join("/")
    }

    pub fn require_data_channel(&self) -> Result<()> {
        match self.channel {
            Channel::Data => Ok(()),
            Channel::Shared => Err(Error::ChannelViolation(self.label())),
        }
    }

    /// Uniform value in `[0, 1)` built from the top 53 bits of one draw.
    pub fn uniform_unit(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.next_u64() >> 11) as f64 * SCALE
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform_unit() < p
    }

    /// Uniform integer in `[0, n)` by rejection on the top bits.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        if n.is_power_of_two() {
            return self.next_u64() & (n - 1);
        }
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// `n` fresh bits, 64 per draw.
    pub fn random_bits(&mut self, n: usize) -> BitVector {
        let mut v = BitVector::zeros(n);
        let mut i = 0;
        while i < n {
            let w = self.next_u64();
            for j in 0..64.min(n - i) {
                if (w >> j) & 1 == 1 {
                    v.set(i + j, true);
                }
            }
            i += 64;
        }
        v
    }

    /// Pseudorandom function of `x` keyed by this stream's identity.
    /// Does not advance the stream.
    pub fn keyed_bit(&self, x: &BitVector) -> bool {
        keyed_bit_with(&self.key, x)
    }
}

/// The keyed bit function behind [`SeedStream::keyed_bit`], usable from a stored key.
pub fn keyed_bit_with(key: &[u8; 32], x: &BitVector) -> bool {
    let mut h = Sha256::new();
    h.update(b"keyed-bit");
    h.update(key);
    h.update((x.len() as u64).to_le_bytes());
    h.update(x.to_bytes());
    let digest: [u8; 32] = h.finalize().into();
    digest[31] & 1 == 1
}

impl RngCore for SeedStream {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let w = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }
}

impl PartialEq for SeedStream {
    fn eq(&self, other: &Self) -> bool {
        self.channel == other.channel
            && self.root_seed == other.root_seed
            && self.path == other.path
            && self.counter == other.counter
    }
}

impl Eq for SeedStream {}

impl fmt::Debug for SeedStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeedStream")
            .field("channel", &self.channel)
            .field("root_seed", &self.root_seed)
            .field("path", &self.path)
            .field("counter", &self.counter)
            .finish()
    }
}
