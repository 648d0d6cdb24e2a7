use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::gf2::BitVector;
use crate::rng::SeededStream;

/// Root key from which every node and tag key is derived.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct MasterSecret([u8; 32]);

impl MasterSecret {
    pub fn generate(stream: &mut SeededStream) -> Self {
        let mut b = [0u8; 32];
        stream.fill_bytes(&mut b);
        Self(b)
    }

    pub fn from_bytes(b: [u8; 32]) -> Self {
        Self(b)
    }

    fn prf(&self, domain: &[u8], input: &[u8]) -> ChaCha20Rng {
        let mut h = Sha256::new();
        h.update(domain);
        h.update(self.0);
        h.update((input.len() as u64).to_le_bytes());
        h.update(input);
        ChaCha20Rng::from_seed(h.finalize().into())
    }

    /// First `bits` bits of the keyed stream for `(domain, input)`.
    pub(crate) fn expand(&self, domain: &[u8], input: &[u8], bits: usize) -> BitVector {
        let mut rng = self.prf(domain, input);
        let words = (0..bits.div_ceil(64)).map(|_| rng.next_u64()).collect();
        BitVector::from_words(bits, words).expect("word count matches")
    }
}

impl fmt::Debug for MasterSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MasterSecret(..)")
    }
}

/// Child indices from the root: `indices[i]` picks the child at level `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePath {
    indices: Vec<u64>,
}

impl NodePath {
    pub fn new(indices: Vec<u64>, beta: u64, d: u32) -> Result<Self> {
        if indices.is_empty() || indices.len() > d as usize {
            return Err(Error::InvalidPath(format!(
                "path length {} outside 1..={d}",
                indices.len()
            )));
        }
        if let Some(bad) = indices.iter().find(|&&i| i >= beta) {
            return Err(Error::InvalidPath(format!(
                "child index {bad} >= beta {beta}"
            )));
        }
        Ok(Self { indices })
    }

    /// Path to leaf `leaf` of a depth-`d`, fan-out-`beta` tree.
    pub fn of_leaf(leaf: u64, beta: u64, d: u32) -> Result<Self> {
        let cap = beta
            .checked_pow(d)
            .ok_or_else(|| Error::InvalidPath("capacity overflows".into()))?;
        if leaf >= cap {
            return Err(Error::InvalidPath(format!("leaf {leaf} >= capacity {cap}")));
        }
        let mut indices = vec![0; d as usize];
        let mut rest = leaf;
        for slot in indices.iter_mut().rev() {
            *slot = rest % beta;
            rest /= beta;
        }
        Ok(Self { indices })
    }

    pub fn level(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    /// Ancestor at `level` (1-based); `level == self.level()` is the node itself.
    pub fn prefix(&self, level: usize) -> NodePath {
        assert!((1..=self.level()).contains(&level), "level out of range");
        NodePath {
            indices: self.indices[..level].to_vec(),
        }
    }

    pub fn to_leaf(&self, beta: u64) -> u64 {
        self.indices.iter().fold(0, |acc, &i| acc * beta + i)
    }

    /// Canonical encoding `"1:i1/2:i2/..."`.
    pub fn encode(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (lvl, idx) in self.indices.iter().enumerate() {
            if lvl > 0 {
                f.write_str("/")?;
            }
            write!(f, "{}:{}", lvl + 1, idx)?;
        }
        Ok(())
    }
}

/// Parses the canonical encoding; bounds are checked by [`NodePath::new`].
impl FromStr for NodePath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut indices = Vec::new();
        for (pos, part) in s.split('/').enumerate() {
            let (lvl, idx) = part
                .split_once(':')
                .ok_or_else(|| Error::InvalidPath(format!("malformed segment {part:?}")))?;
            let lvl: usize = lvl
                .parse()
                .map_err(|_| Error::InvalidPath(format!("bad level in {part:?}")))?;
            if lvl != pos + 1 {
                return Err(Error::InvalidPath(format!("level {lvl} out of order")));
            }
            indices.push(
                idx.parse()
                    .map_err(|_| Error::InvalidPath(format!("bad index in {part:?}")))?,
            );
        }
        Ok(Self { indices })
    }
}

/// `k_y`-bit key of the node at `path`.
pub fn derive_node_key(master: &MasterSecret, path: &NodePath, k_y: usize) -> BitVector {
    master.expand(b"hbtree/node/v1", path.encode().as_bytes(), k_y)
}

/// Keys of all `beta` children of `parent` (`None` = root), one per row.
pub(crate) fn derive_children(
    master: &MasterSecret,
    parent: Option<&NodePath>,
    beta: u64,
    k_y: usize,
) -> BitMatrix {
    let base = parent.map(|p| p.indices.clone()).unwrap_or_default();
    let rows: Vec<BitVector> = (0..beta)
        .map(|c| {
            let mut idx = base.clone();
            idx.push(c);
            derive_node_key(master, &NodePath { indices: idx }, k_y)
        })
        .collect();
    BitMatrix::from_rows(k_y, &rows).expect("row width")
}

/// Authentication keys `(x_t, y_t)` bound to a leaf.
pub fn derive_auth_keys(
    master: &MasterSecret,
    leaf: u64,
    k_x: usize,
    k_y: usize,
) -> crate::hb::HbPlusKeys {
    let id = leaf.to_le_bytes();
    crate::hb::HbPlusKeys {
        x: master.expand(b"hbtree/auth-x/v1", &id, k_x),
        y: master.expand(b"hbtree/auth-y/v1", &id, k_y),
    }
}
