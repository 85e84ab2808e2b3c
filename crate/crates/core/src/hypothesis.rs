//! Predictors over `{0,1}^d` with a canonical text form.
//!
//! Two executions replicate exactly when the canonical strings of their outputs
//! are byte-identical, so every variant has exactly one serialization.

use std::fmt;

use crate::bits::BitVector;
use crate::lift::LiftedHypothesis;
use crate::ows::OwsThreshold;
use crate::seedstream::keyed_bit_with;

#[derive(Debug, Clone, PartialEq)]
pub enum Hypothesis {
    AllZero,
    Constant(bool),
    /// `x ↦ b + w·x` over GF(2).
    AffineParity { w: BitVector, b: bool },
    /// Indicator of a single point.
    Point(BitVector),
    OwsThreshold(OwsThreshold),
    /// A pseudorandom guess `x ↦ keyed_bit(key, x)`.
    KeyedGuess { key: [u8; 32] },
    /// Full truth table; entry `j` is the label of `BitVector::from_index(j, dim)`.
    Table { dim: usize, values: BitVector },
    Lifted(Box<LiftedHypothesis>),
}

impl Hypothesis {
    pub fn eval(&self, x: &BitVector) -> bool {
        match self {
            Hypothesis::AllZero => false,
            Hypothesis::Constant(b) => *b,
            Hypothesis::AffineParity { w, b } => *b ^ w.dot(x),
            Hypothesis::Point(p) => p == x,
            Hypothesis::OwsThreshold(h) => h.eval(x),
            Hypothesis::KeyedGuess { key } => keyed_bit_with(key, x),
            Hypothesis::Table { dim, values } => {
                assert_eq!(x.len(), *dim, "dimension mismatch");
                values.get(x.to_index() as usize)
            }
            Hypothesis::Lifted(h) => h.eval(x),
        }
    }

    /// The canonical serialization compared for replicability.
    pub fn canonical(&self) -> String {
        match self {
            Hypothesis::AllZero => "ALLZERO".to_owned(),
            Hypothesis::Constant(b) => format!("CONST;{}", *b as u8),
            Hypothesis::AffineParity { w, b } => format!("w={};b={}", w.to_hex(), *b as u8),
            Hypothesis::Point(p) => format!("POINT;{}", p.to_hex()),
            Hypothesis::OwsThreshold(h) => h.canonical(),
            Hypothesis::KeyedGuess { key } => format!("GUESS;key={}", hex::encode(key)),
            Hypothesis::Table { dim, values } => format!("TABLE;d={dim};{}", values.to_hex()),
            Hypothesis::Lifted(h) => h.canonical(),
        }
    }

    /// Truth table of an arbitrary function on `{0,1}^dim`.
    pub fn table(dim: usize, f: impl Fn(&BitVector) -> bool) -> Hypothesis {
        assert!(dim <= 24, "truth tables limited to 24 coordinates");
        let mut values = BitVector::zeros(1 << dim);
        for j in 0..(1u64 << dim) {
            if f(&BitVector::from_index(j, dim)) {
                values.set(j as usize, true);
            }
        }
        Hypothesis::Table { dim, values }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}
