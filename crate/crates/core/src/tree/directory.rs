use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use super::keys::{derive_auth_keys, derive_children, derive_node_key, MasterSecret, NodePath};
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVector};
use crate::hb::{HbPlusKeys, ProtocolParams};
use crate::rng::SeededStream;

/// Upper bound on node keys held in the children cache.
const CACHE_KEY_LIMIT: u64 = 1 << 22;

/// Reader-side key tree: master secret, leaf assignments and a lazily filled
/// cache of per-node children keys.
#[derive(Debug)]
pub struct TreeDirectory {
    params: ProtocolParams,
    master: MasterSecret,
    capacity: u64,
    assignments: BTreeMap<u64, u64>,
    owners: HashMap<u64, u64>,
    // Sparse Fisher-Yates state: positions >= assigned that were swapped.
    shuffle: HashMap<u64, u64>,
    cache: RwLock<HashMap<Vec<u64>, Arc<BitMatrix>>>,
    cached_keys: std::sync::atomic::AtomicU64,
}

/// Everything a tag stores: `d` path keys plus its authentication keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagCredential {
    pub tag_id: u64,
    pub path_keys: Vec<BitVector>,
    pub x_t: BitVector,
    pub y_t: BitVector,
    /// Ground truth for simulations; `None` for impostors.
    pub leaf: Option<u64>,
}

impl TagCredential {
    /// Unregistered tag holding fresh uniform keys.
    pub fn impostor(params: &ProtocolParams, stream: &mut SeededStream) -> Self {
        Self {
            tag_id: u64::MAX,
            path_keys: (0..params.d)
                .map(|_| BitVector::random(params.k_y, stream))
                .collect(),
            x_t: BitVector::random(params.k_x, stream),
            y_t: BitVector::random(params.k_y, stream),
            leaf: None,
        }
    }

    /// Key material in bits.
    pub fn storage_bits(&self) -> usize {
        self.path_keys.iter().map(BitVector::len).sum::<usize>() + self.x_t.len() + self.y_t.len()
    }

    pub fn auth_keys(&self) -> HbPlusKeys {
        HbPlusKeys {
            x: self.x_t.clone(),
            y: self.y_t.clone(),
        }
    }
}

/// Creates an empty directory with a fresh master secret drawn from `stream`.
pub fn setup_system(
    n_bound: u64,
    params: ProtocolParams,
    stream: &mut SeededStream,
) -> Result<TreeDirectory> {
    params.validate()?;
    let capacity = params.capacity().expect("validated");
    if capacity < n_bound {
        return Err(Error::Capacity {
            capacity,
            required: n_bound,
        });
    }
    Ok(TreeDirectory {
        master: MasterSecret::generate(stream),
        params,
        capacity,
        assignments: BTreeMap::new(),
        owners: HashMap::new(),
        shuffle: HashMap::new(),
        cache: RwLock::new(HashMap::new()),
        cached_keys: Default::default(),
    })
}

impl TreeDirectory {
    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn leaf_of(&self, tag_id: u64) -> Option<u64> {
        self.assignments.get(&tag_id).copied()
    }

    pub fn owner_of(&self, leaf: u64) -> Option<u64> {
        self.owners.get(&leaf).copied()
    }

    /// Registered `(tag_id, leaf)` pairs in tag order.
    pub fn assignments(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.assignments.iter().map(|(&t, &l)| (t, l))
    }

    pub fn node_key(&self, path: &NodePath) -> Result<BitVector> {
        NodePath::new(path.indices().to_vec(), self.params.beta, self.params.d)?;
        Ok(derive_node_key(&self.master, path, self.params.k_y))
    }

    pub fn auth_keys(&self, leaf: u64) -> HbPlusKeys {
        derive_auth_keys(&self.master, leaf, self.params.k_x, self.params.k_y)
    }

    /// Keys of the children of the node reached by `prefix` (empty = root),
    /// as a `beta × k_y` matrix.
    pub fn children_keys(&self, prefix: &[u64]) -> Arc<BitMatrix> {
        if let Some(m) = self.cache.read().expect("cache lock").get(prefix) {
            return Arc::clone(m);
        }
        let parent = if prefix.is_empty() {
            None
        } else {
            Some(NodePath::new(prefix.to_vec(), self.params.beta, self.params.d).expect("prefix"))
        };
        let m = Arc::new(derive_children(
            &self.master,
            parent.as_ref(),
            self.params.beta,
            self.params.k_y,
        ));
        use std::sync::atomic::Ordering;
        if self.cached_keys.load(Ordering::Relaxed) + self.params.beta <= CACHE_KEY_LIMIT {
            let mut cache = self.cache.write().expect("cache lock");
            if cache.insert(prefix.to_vec(), Arc::clone(&m)).is_none() {
                self.cached_keys
                    .fetch_add(self.params.beta, Ordering::Relaxed);
            }
        }
        m
    }

    /// Assigns `tag_id` to a uniformly random free leaf and issues its credential.
    pub fn register_tag(
        &mut self,
        tag_id: u64,
        stream: &mut SeededStream,
    ) -> Result<TagCredential> {
        if self.assignments.contains_key(&tag_id) {
            return Err(Error::DuplicateTag(tag_id));
        }
        let n = self.assignments.len() as u64;
        if n >= self.capacity {
            return Err(Error::TreeFull(n));
        }
        let j = n + stream.below(self.capacity - n);
        let at = |s: &HashMap<u64, u64>, i: u64| s.get(&i).copied().unwrap_or(i);
        let leaf = at(&self.shuffle, j);
        let displaced = at(&self.shuffle, n);
        self.shuffle.insert(j, displaced);
        self.shuffle.remove(&n);
        self.assignments.insert(tag_id, leaf);
        self.owners.insert(leaf, tag_id);
        Ok(self.credential_for(tag_id, leaf))
    }

    /// Credential of an already registered tag.
    pub fn credential(&self, tag_id: u64) -> Option<TagCredential> {
        self.leaf_of(tag_id)
            .map(|leaf| self.credential_for(tag_id, leaf))
    }

    fn credential_for(&self, tag_id: u64, leaf: u64) -> TagCredential {
        let p = &self.params;
        let path = NodePath::of_leaf(leaf, p.beta, p.d).expect("leaf in range");
        let path_keys = (1..=p.d as usize)
            .map(|lvl| derive_node_key(&self.master, &path.prefix(lvl), p.k_y))
            .collect();
        let keys = self.auth_keys(leaf);
        TagCredential {
            tag_id,
            path_keys,
            x_t: keys.x,
            y_t: keys.y,
            leaf: Some(leaf),
        }
    }
}
