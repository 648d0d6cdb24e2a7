//! Seeded, domain-separated random streams.
//!
//! Every random draw in the crate flows from a [`RootSeed`]. Streams are
//! addressed by `(label, index)` so results never depend on execution order.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::Error;

const DOMAIN: &[u8] = b"hbtree/stream/v1";

fn derive(parent: &[u8; 32], label: &str, index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(DOMAIN);
    h.update(parent);
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update(index.to_le_bytes());
    h.finalize().into()
}

/// 256-bit experiment seed.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RootSeed(pub [u8; 32]);

impl RootSeed {
    /// Convenience constructor: the integer fills the low eight bytes.
    pub fn from_u64(v: u64) -> Self {
        let mut b = [0u8; 32];
        b[..8].copy_from_slice(&v.to_le_bytes());
        Self(b)
    }

    pub fn stream(&self, label: &str, index: u64) -> SeededStream {
        SeededStream::from_key(derive(&self.0, label, index))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

/// Accepts up to 64 hex digits; shorter strings are left-padded with zeros.
impl FromStr for RootSeed {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim().trim_start_matches("0x");
        if s.is_empty() || s.len() > 64 {
            return Err(Error::Encoding(format!(
                "seed must be 1 to 64 hex digits, got {} characters",
                s.len()
            )));
        }
        let padded = format!("{s:0>64}");
        let bytes = hex::decode(padded).map_err(|e| Error::Encoding(e.to_string()))?;
        let mut b = [0u8; 32];
        b.copy_from_slice(&bytes);
        Ok(Self(b))
    }
}

impl fmt::Debug for RootSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RootSeed({})", self.to_hex())
    }
}

impl fmt::Display for RootSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for RootSeed {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for RootSeed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A single-owner ChaCha20 stream with a draw counter (in 64-bit words).
#[derive(Clone)]
pub struct SeededStream {
    key: [u8; 32],
    rng: ChaCha20Rng,
    counter: u64,
}

impl SeededStream {
    fn from_key(key: [u8; 32]) -> Self {
        Self {
            key,
            rng: ChaCha20Rng::from_seed(key),
            counter: 0,
        }
    }

    /// Child stream keyed by this stream's key; does not advance `self`.
    pub fn substream(&self, label: &str, index: u64) -> SeededStream {
        SeededStream::from_key(derive(&self.key, label, index))
    }

    /// Number of 64-bit words drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn fill_words(&mut self, out: &mut [u64]) {
        for w in out.iter_mut() {
            *w = self.rng.next_u64();
        }
        self.counter += out.len() as u64;
    }

    /// Uniform integer in `[0, bound)` by rejection; `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let zone = u64::MAX - (u64::MAX - bound + 1) % bound;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % bound;
            }
        }
    }

    pub fn coin(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }
}

impl RngCore for SeededStream {
    fn next_u32(&mut self) -> u32 {
        self.next_u64() as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let w = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

impl fmt::Debug for SeededStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeededStream")
            .field("counter", &self.counter)
            .finish_non_exhaustive()
    }
}
