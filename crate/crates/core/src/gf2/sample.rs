use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::matrix::BitMatrix;
use super::vector::{words_for, BitVector};
use crate::error::{Error, Result};
use crate::rng::SeededStream;

/// Largest supported exponent: ε = 2^-16.
const MAX_K: u32 = 16;

/// A noise rate that can be sampled exactly: zero or `2^-k` with `k >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseRate {
    Zero,
    Dyadic { k: u32 },
}

impl NoiseRate {
    pub fn dyadic(k: u32) -> Result<Self> {
        if (2..=MAX_K).contains(&k) {
            Ok(Self::Dyadic { k })
        } else {
            Err(Error::NoiseRate(0.5f64.powi(k as i32)))
        }
    }

    pub fn from_f64(eps: f64) -> Result<Self> {
        if eps == 0.0 {
            return Ok(Self::Zero);
        }
        (2..=MAX_K)
            .find(|&k| eps == 0.5f64.powi(k as i32))
            .map(|k| Self::Dyadic { k })
            .ok_or(Error::NoiseRate(eps))
    }

    pub fn value(self) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Dyadic { k } => 0.5f64.powi(k as i32),
        }
    }

    /// Exact rate as the pair `(1, 2^k)`, or `(0, 1)` for zero.
    pub fn as_ratio(self) -> (u64, u64) {
        match self {
            Self::Zero => (0, 1),
            Self::Dyadic { k } => (1, 1u64 << k),
        }
    }
}

impl TryFrom<f64> for NoiseRate {
    type Error = Error;

    fn try_from(eps: f64) -> Result<Self> {
        Self::from_f64(eps)
    }
}

impl fmt::Display for NoiseRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl Serialize for NoiseRate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for NoiseRate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        NoiseRate::from_f64(v).map_err(serde::de::Error::custom)
    }
}

pub fn sample_uniform_vector(stream: &mut SeededStream, len: usize) -> BitVector {
    BitVector::random(len, stream)
}

pub fn sample_uniform_matrix(stream: &mut SeededStream, rows: usize, cols: usize) -> BitMatrix {
    BitMatrix::random(rows, cols, stream)
}

/// `r` independent Bernoulli(eps) bits. Each bit of a `2^-k` rate is the AND
/// of `k` uniform bits, so the distribution is exact.
pub fn sample_noise(stream: &mut SeededStream, r: usize, eps: NoiseRate) -> BitVector {
    let mut v = BitVector::zeros(r);
    if let NoiseRate::Dyadic { k } = eps {
        let mut scratch = vec![0u64; words_for(r)];
        let words = v.words_mut();
        words.fill(u64::MAX);
        for _ in 0..k {
            stream.fill_words(&mut scratch);
            for (w, s) in words.iter_mut().zip(&scratch) {
                *w &= s;
            }
        }
        v.canonicalize();
    }
    v
}
