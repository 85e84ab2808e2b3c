//! Packed bit vectors over GF(2).

use std::fmt;

use crate::error::{Error, Result};

/// A fixed-length bit string packed into 64-bit words.
///
/// Bits beyond `len` in the last word are always zero, so the derived
/// equality, ordering and hashing only see the logical contents.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self {
            len,
            words: vec![u64::MAX; len.div_ceil(64)],
        };
        v.clear_tail();
        v
    }

    /// The standard basis vector `e_i`.
    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Coordinate `i` is bit `i` of `index`. Used to enumerate `{0,1}^len` for `len <= 64`.
    pub fn from_index(index: u64, len: usize) -> Self {
        assert!(len <= 64, "from_index supports at most 64 coordinates");
        let mut v = Self::zeros(len);
        if len > 0 {
            v.words[0] = if len == 64 { index } else { index & ((1u64 << len) - 1) };
        }
        v
    }

    /// Inverse of [`BitVector::from_index`].
    pub fn to_index(&self) -> u64 {
        assert!(self.len <= 64);
        self.words.first().copied().unwrap_or(0)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i & 63);
        if bit {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len);
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    /// Copy with coordinate `i` flipped (`x^{~i}`).
    pub fn flipped(&self, i: usize) -> Self {
        let mut v = self.clone();
        v.flip(i);
        v
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "dimension mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        let mut v = self.clone();
        v.xor_assign(other);
        v
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len, "dimension mismatch");
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Index of the lowest set bit.
    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(k, w)| k * 64 + w.trailing_zeros() as usize)
    }

    pub fn ones_iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Sub-vector of coordinates `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> BitVector {
        assert!(start <= end && end <= self.len);
        let mut v = BitVector::zeros(end - start);
        for i in start..end {
            if self.get(i) {
                v.set(i - start, true);
            }
        }
        v
    }

    pub fn concat(&self, other: &BitVector) -> BitVector {
        let mut v = BitVector::zeros(self.len + other.len);
        for i in self.ones_iter() {
            v.set(i, true);
        }
        for i in other.ones_iter() {
            v.set(self.len + i, true);
        }
        v
    }

    /// Appends one coordinate at the end.
    pub fn push(&self, bit: bool) -> BitVector {
        let mut v = BitVector::zeros(self.len + 1);
        for i in self.ones_iter() {
            v.set(i, true);
        }
        v.set(self.len, bit);
        v
    }

    /// Packs bits most-significant-first: coordinate 0 is the top bit of byte 0.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for i in self.ones_iter() {
            out[i / 8] |= 0x80 >> (i % 8);
        }
        out
    }

    /// Reads the first `len` bits of `bytes` in the [`BitVector::to_bytes`] layout.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() * 8 < len {
            return Err(Error::Data(format!(
                "{} bytes cannot hold {len} bits",
                bytes.len()
            )));
        }
        let mut v = BitVector::zeros(len);
        for i in 0..len {
            if bytes[i / 8] & (0x80 >> (i % 8)) != 0 {
                v.set(i, true);
            }
        }
        Ok(v)
    }

    /// Hex digits, four coordinates per digit, coordinate 0 as the high bit of
    /// the first digit. The last digit is zero-padded.
    pub fn to_hex(&self) -> String {
        const DIGITS: &[u8; 16] = b"0123456789abcdef";
        let mut s = String::with_capacity(self.len.div_ceil(4));
        for chunk in 0..self.len.div_ceil(4) {
            let mut nibble = 0usize;
            for j in 0..4 {
                let i = chunk * 4 + j;
                if i < self.len && self.get(i) {
                    nibble |= 8 >> j;
                }
            }
            s.push(DIGITS[nibble] as char);
        }
        s
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        if hex.len() != len.div_ceil(4) {
            return Err(Error::Data(format!(
                "hex string of {} digits does not encode {len} bits",
                hex.len()
            )));
        }
        let mut v = BitVector::zeros(len);
        for (chunk, c) in hex.chars().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| Error::Data(format!("invalid hex digit {c:?}")))?;
            for j in 0..4 {
                let i = chunk * 4 + j;
                if nibble & (8 >> j) != 0 {
                    if i >= len {
                        return Err(Error::Data("nonzero padding in hex bit string".into()));
                    }
                    v.set(i, true);
                }
            }
        }
        Ok(v)
    }

    fn clear_tail(&mut self) {
        let rem = self.len & 63;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_layout_is_msb_first() {
        let v = BitVector::from_bools(&[true, false, true, false, false, true]);
        assert_eq!(v.to_hex(), "a4");
        assert_eq!(BitVector::from_hex("a4", 6).unwrap(), v);
        assert!(BitVector::from_hex("a5", 6).is_err());
        assert_eq!(v.to_bytes(), vec![0b1010_0100]);
    }

    #[test]
    fn ones_masks_tail() {
        let v = BitVector::ones(70);
        assert_eq!(v.count_ones(), 70);
        assert_eq!(v, BitVector::from_bools(&[true; 70]));
    }

    #[test]
    fn dot_and_xor() {
        let a = BitVector::from_index(0b1011, 4);
        let b = BitVector::from_index(0b0011, 4);
        assert!(!a.dot(&b));
        assert_eq!(a.xor(&b).to_index(), 0b1000);
        assert_eq!(a.first_one(), Some(0));
    }

    #[test]
    fn slice_concat_roundtrip() {
        let v = BitVector::from_index(0b1101_0110, 8);
        assert_eq!(v.slice(0, 3).concat(&v.slice(3, 8)), v);
        assert_eq!(v.slice(2, 2).len(), 0);
    }
}
