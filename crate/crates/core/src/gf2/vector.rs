use std::fmt;
use std::ops::{BitAnd, BitXor, BitXorAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};
use crate::rng::SeededStream;

pub(crate) const WORD_BITS: usize = 64;

#[inline]
pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Mask selecting the live bits of the final word of a `bits`-long vector.
#[inline]
pub(crate) fn tail_mask(bits: usize) -> u64 {
    match bits % WORD_BITS {
        0 => u64::MAX,
        rem => (1u64 << rem) - 1,
    }
}

/// A packed vector over GF(2).
///
/// Bit `i` lives in word `i / 64` at position `i % 64`. Bits past `len` are
/// always zero, so derived equality and popcounts work on the raw words.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self {
            len,
            words: vec![u64::MAX; words_for(len)],
        };
        v.canonicalize();
        v
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut v = Self::zeros(0);
        for b in bits {
            v.push(b);
        }
        v
    }

    /// Builds a vector from raw words, clearing any bits past `len`.
    pub fn from_words(len: usize, mut words: Vec<u64>) -> Result<Self> {
        check_dim("BitVector::from_words", words_for(len), words.len())?;
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(len);
        }
        Ok(Self { len, words })
    }

    /// Uniformly random vector drawn from `stream`.
    pub fn random(len: usize, stream: &mut SeededStream) -> Self {
        let mut words = vec![0; words_for(len)];
        stream.fill_words(&mut words);
        let mut v = Self { len, words };
        v.canonicalize();
        v
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
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if bit {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % WORD_BITS == 0 {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, bit);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVector) -> Result<bool> {
        check_dim("BitVector::dot", self.len, other.len)?;
        Ok(dot_words(&self.words, &other.words))
    }

    pub fn xor(&self, other: &BitVector) -> Result<BitVector> {
        check_dim("BitVector::xor", self.len, other.len)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(BitVector {
            len: self.len,
            words,
        })
    }

    pub fn xor_assign(&mut self, other: &BitVector) -> Result<()> {
        check_dim("BitVector::xor_assign", self.len, other.len)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        Ok(())
    }

    /// Concatenation `self || other`.
    pub fn concat(&self, other: &BitVector) -> BitVector {
        let mut out = self.clone();
        for b in other.iter() {
            out.push(b);
        }
        out
    }

    /// Copy of bits `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> BitVector {
        assert!(start + len <= self.len, "slice out of range");
        let mut words = vec![0u64; words_for(len)];
        for (w, out) in words.iter_mut().enumerate() {
            *out = self.word_at(start + w * WORD_BITS);
        }
        let mut v = BitVector { len, words };
        v.canonicalize();
        v
    }

    /// The 64 bits starting at bit offset `start`, zero-filled past the end.
    #[inline]
    pub(crate) fn word_at(&self, start: usize) -> u64 {
        let idx = start / WORD_BITS;
        let shift = start % WORD_BITS;
        let lo = self.words.get(idx).copied().unwrap_or(0);
        if shift == 0 {
            lo
        } else {
            let hi = self.words.get(idx + 1).copied().unwrap_or(0);
            (lo >> shift) | (hi << (WORD_BITS - shift))
        }
    }

    /// Hex of the packed words, each written as little-endian bytes.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        hex::encode(bytes)
    }

    pub fn from_hex(len: usize, s: &str) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::Encoding(e.to_string()))?;
        if bytes.len() != words_for(len) * 8 {
            return Err(Error::Encoding(format!(
                "{} hex bytes cannot hold a {len}-bit vector",
                bytes.len()
            )));
        }
        let words: Vec<u64> = bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let v = Self { len, words };
        if v.words.last().is_some_and(|w| w & !tail_mask(len) != 0) {
            return Err(Error::Encoding("padding bits are not zero".into()));
        }
        Ok(v)
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    pub(crate) fn canonicalize(&mut self) {
        let mask = tail_mask(self.len);
        if let Some(last) = self.words.last_mut() {
            *last &= mask;
        }
    }
}

#[inline]
pub(crate) fn dot_words(a: &[u64], b: &[u64]) -> bool {
    let acc = a.iter().zip(b).fold(0u64, |acc, (x, y)| acc ^ (x & y));
    acc.count_ones() & 1 == 1
}

pub fn hamming_weight(v: &BitVector) -> usize {
    v.weight()
}

pub fn hamming_distance(u: &BitVector, v: &BitVector) -> Result<usize> {
    check_dim("hamming_distance", u.len, v.len)?;
    Ok(u.words
        .iter()
        .zip(&v.words)
        .map(|(a, b)| (a ^ b).count_ones() as usize)
        .sum())
}

impl BitXor for &BitVector {
    type Output = BitVector;

    /// Panics on length mismatch; use [`BitVector::xor`] for a checked variant.
    fn bitxor(self, rhs: &BitVector) -> BitVector {
        self.xor(rhs)
            .expect("xor of vectors with different lengths")
    }
}

impl BitXorAssign<&BitVector> for BitVector {
    fn bitxor_assign(&mut self, rhs: &BitVector) {
        self.xor_assign(rhs)
            .expect("xor of vectors with different lengths")
    }
}

impl BitAnd for &BitVector {
    type Output = BitVector;

    fn bitand(self, rhs: &BitVector) -> BitVector {
        assert_eq!(self.len, rhs.len, "and of vectors with different lengths");
        BitVector {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&rhs.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({}; ", self.len)?;
        for b in self.iter().take(128) {
            f.write_str(if b { "1" } else { "0" })?;
        }
        if self.len > 128 {
            f.write_str("...")?;
        }
        f.write_str(")")
    }
}

/// Wire form: `{"bits": <len>, "hex": "<packed words>"}`.
#[derive(Serialize, Deserialize)]
struct HexVector {
    bits: usize,
    hex: String,
}

impl Serialize for BitVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HexVector {
            bits: self.len,
            hex: self.to_hex(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let h = HexVector::deserialize(d)?;
        BitVector::from_hex(h.bits, &h.hex).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RootSeed;
    use proptest::prelude::*;

    fn bits(s: &str) -> BitVector {
        BitVector::from_bits(s.chars().map(|c| c == '1'))
    }

    #[test]
    fn weight_and_distance() {
        assert_eq!(hamming_weight(&bits("0000")), 0);
        let v = bits("1011");
        assert_eq!(hamming_distance(&v, &v).unwrap(), 0);
        assert_eq!(hamming_distance(&bits("101"), &bits("001")).unwrap(), 1);
        assert!(matches!(
            hamming_distance(&bits("10"), &bits("101")),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ones_is_canonical() {
        for len in [0, 1, 63, 64, 65, 130] {
            let v = BitVector::ones(len);
            assert_eq!(v.weight(), len);
            if let Some(last) = v.words().last() {
                assert_eq!(last & !tail_mask(len), 0);
            }
        }
    }

    #[test]
    fn from_words_clears_padding() {
        let v = BitVector::from_words(3, vec![u64::MAX]).unwrap();
        assert_eq!(v.words(), &[0b111]);
        assert!(BitVector::from_words(65, vec![0]).is_err());
    }

    #[test]
    fn hex_rejects_dirty_padding() {
        assert!(BitVector::from_hex(4, "ff00000000000000").is_err());
        let v = BitVector::from_hex(4, "0f00000000000000").unwrap();
        assert_eq!(v, bits("1111"));
    }

    #[test]
    fn slice_crosses_words() {
        let mut s = RootSeed::from_u64(3).stream("slice", 0);
        let v = BitVector::random(200, &mut s);
        let sl = v.slice(61, 70);
        for i in 0..70 {
            assert_eq!(sl.get(i), v.get(61 + i));
        }
    }

    proptest! {
        #[test]
        fn hex_round_trip(len in 0usize..300, seed in any::<u64>()) {
            let mut s = RootSeed::from_u64(seed).stream("hex", 0);
            let v = BitVector::random(len, &mut s);
            let back = BitVector::from_hex(len, &v.to_hex()).unwrap();
            prop_assert_eq!(back, v);
        }

        #[test]
        fn distance_is_metric(len in 1usize..200, seed in any::<u64>()) {
            let mut s = RootSeed::from_u64(seed).stream("metric", 0);
            let u = BitVector::random(len, &mut s);
            let v = BitVector::random(len, &mut s);
            let w = BitVector::random(len, &mut s);
            let duv = hamming_distance(&u, &v).unwrap();
            prop_assert_eq!(duv, (&u ^ &v).weight());
            prop_assert!(duv <= hamming_distance(&u, &w).unwrap() + hamming_distance(&w, &v).unwrap());
        }
    }
}
