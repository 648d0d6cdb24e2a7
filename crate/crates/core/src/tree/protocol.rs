use serde::{Deserialize, Serialize};

use super::directory::{TagCredential, TreeDirectory};
use crate::error::{check_dim, Result};
use crate::gf2::{hamming_distance, sample_noise, BitMatrix, BitVector};
use crate::hb::{
    auth_noise, hbplus_reader_expected, hbplus_tag_respond, verify_threshold, ProtocolParams,
};
use crate::rng::SeededStream;

/// Tag's identification message: one shared challenge and a response per level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraversalMessage {
    pub b_m: BitMatrix,
    pub z_levels: Vec<BitVector>,
}

/// Reader's path through the tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Descent {
    pub leaf: u64,
    /// Chosen child index per level.
    pub choices: Vec<u64>,
    /// Winning distance per level.
    pub distances: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub reader_matvec: u64,
    pub tag_matvec: u64,
    /// Tag to reader.
    pub bits_sent: u64,
    /// Reader to tag.
    pub bits_received: u64,
}

impl OpCounts {
    pub fn total_bits(&self) -> u64 {
        self.bits_sent + self.bits_received
    }

    pub fn add(&mut self, o: &OpCounts) {
        self.reader_matvec += o.reader_matvec;
        self.tag_matvec += o.tag_matvec;
        self.bits_sent += o.bits_sent;
        self.bits_received += o.bits_received;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolOutcome {
    pub identified_leaf: u64,
    pub accepted: bool,
    pub distance: usize,
    pub repeats_used: u32,
    pub op_counts: OpCounts,
    /// First level (1-based) where descent left the tag's path, in the last attempt.
    pub first_wrong_level: Option<u32>,
    /// Levels decided while still on the tag's path, in the last attempt.
    pub levels_on_path: u32,
}

/// Full record of one attempt, serialized with hex-packed vectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub b_m: BitMatrix,
    pub z_levels: Vec<BitVector>,
    pub a_m: BitMatrix,
    pub z: BitVector,
    pub identified_leaf: u64,
    pub distance: usize,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Skip descent and authenticate against this leaf.
    pub forced_leaf: Option<u64>,
}

/// Draws `B` (`r × k_y`) and answers every level with the top `r_tr` rows.
pub fn tag_traversal_respond(
    cred: &TagCredential,
    params: &ProtocolParams,
    stream: &mut SeededStream,
) -> Result<TraversalMessage> {
    check_dim(
        "tag_traversal_respond depth",
        params.d as usize,
        cred.path_keys.len(),
    )?;
    let b_m = BitMatrix::random(params.r, params.k_y, stream);
    let z_levels = cred
        .path_keys
        .iter()
        .map(|y| {
            let mut z = b_m.mul_vec_top(y, params.r_tr)?;
            z.xor_assign(&sample_noise(stream, params.r_tr, params.eps))?;
            Ok(z)
        })
        .collect::<Result<_>>()?;
    Ok(TraversalMessage { b_m, z_levels })
}

/// Greedy descent by minimum distance, lowest child index on ties.
pub fn reader_descend_path(dir: &TreeDirectory, msg: &TraversalMessage) -> Result<Descent> {
    let p = dir.params();
    check_dim("reader_descend levels", p.d as usize, msg.z_levels.len())?;
    check_dim("reader_descend rows", p.r, msg.b_m.rows())?;
    check_dim("reader_descend cols", p.k_y, msg.b_m.cols())?;
    let mut choices = Vec::with_capacity(p.d as usize);
    let mut distances = Vec::with_capacity(p.d as usize);
    for z in &msg.z_levels {
        check_dim("reader_descend z", p.r_tr, z.len())?;
        let kids = dir.children_keys(&choices);
        let mut best = (usize::MAX, 0u64);
        for c in 0..p.beta {
            let pred = msg.b_m.mul_vec_top(&kids.row(c as usize), p.r_tr)?;
            let dist = hamming_distance(&pred, z)?;
            if dist < best.0 {
                best = (dist, c);
            }
        }
        choices.push(best.1);
        distances.push(best.0);
    }
    let leaf = choices.iter().fold(0, |acc, &i| acc * p.beta + i);
    Ok(Descent {
        leaf,
        choices,
        distances,
    })
}

pub fn reader_descend(dir: &TreeDirectory, msg: &TraversalMessage) -> Result<u64> {
    reader_descend_path(dir, msg).map(|d| d.leaf)
}

fn wrong_level(
    params: &ProtocolParams,
    true_leaf: Option<u64>,
    choices: &[u64],
) -> (Option<u32>, u32) {
    let Some(leaf) = true_leaf else {
        return (None, 0);
    };
    let truth = super::keys::NodePath::of_leaf(leaf, params.beta, params.d).expect("leaf in range");
    match truth
        .indices()
        .iter()
        .zip(choices)
        .position(|(a, b)| a != b)
    {
        Some(i) => (Some(i as u32 + 1), i as u32 + 1),
        None => (None, params.d),
    }
}

fn attempt(
    dir: &TreeDirectory,
    cred: &TagCredential,
    stream: &SeededStream,
    opts: RunOptions,
) -> Result<(ProtocolOutcome, Transcript)> {
    let p = dir.params();
    let mut tag_s = stream.substream("tag", 0);
    let mut reader_s = stream.substream("reader", 0);

    let msg = tag_traversal_respond(cred, p, &mut tag_s)?;
    let (leaf, choices) = match opts.forced_leaf {
        Some(l) => (l, Vec::new()),
        None => {
            let d = reader_descend_path(dir, &msg)?;
            (d.leaf, d.choices)
        }
    };
    let (first_wrong_level, levels_on_path) = if opts.forced_leaf.is_some() {
        (None, 0)
    } else {
        wrong_level(p, cred.leaf, &choices)
    };

    let a_m = BitMatrix::random(p.r, p.k_x, &mut reader_s);
    let noise = auth_noise(&mut tag_s, p);
    let z = hbplus_tag_respond(&a_m, &msg.b_m, &cred.auth_keys(), &noise)?;
    let expected = hbplus_reader_expected(&a_m, &msg.b_m, &dir.auth_keys(leaf))?;
    let verdict = verify_threshold(&z, &expected, p.tau)?;

    let (r, r_tr, d) = (p.r as u64, p.r_tr as u64, p.d as u64);
    let descent_matvec = if opts.forced_leaf.is_some() {
        0
    } else {
        d * p.beta
    };
    let op_counts = OpCounts {
        tag_matvec: d + 2,
        reader_matvec: descent_matvec + 2,
        bits_sent: r * p.k_y as u64 + d * r_tr + r,
        bits_received: r * p.k_x as u64,
    };
    let outcome = ProtocolOutcome {
        identified_leaf: leaf,
        accepted: verdict.accepted,
        distance: verdict.distance,
        repeats_used: 1,
        op_counts,
        first_wrong_level,
        levels_on_path,
    };
    let transcript = Transcript {
        b_m: msg.b_m,
        z_levels: msg.z_levels,
        a_m,
        z,
        identified_leaf: leaf,
        distance: verdict.distance,
        accepted: verdict.accepted,
    };
    Ok((outcome, transcript))
}

/// One traversal plus authentication. Uses the same attempt stream as the
/// first iteration of [`run_protocol_iterated`].
pub fn run_protocol_once(
    dir: &TreeDirectory,
    cred: &TagCredential,
    stream: &SeededStream,
) -> Result<ProtocolOutcome> {
    run_protocol_with(dir, cred, stream, RunOptions::default(), 1)
}

/// Repeats until acceptance or `params.s` attempts.
pub fn run_protocol_iterated(
    dir: &TreeDirectory,
    cred: &TagCredential,
    stream: &SeededStream,
) -> Result<ProtocolOutcome> {
    run_protocol_with(dir, cred, stream, RunOptions::default(), dir.params().s)
}

pub fn run_protocol_with(
    dir: &TreeDirectory,
    cred: &TagCredential,
    stream: &SeededStream,
    opts: RunOptions,
    max_attempts: u32,
) -> Result<ProtocolOutcome> {
    let mut total = OpCounts::default();
    let mut j = 0;
    loop {
        let (mut out, _) = attempt(dir, cred, &stream.substream("attempt", j as u64), opts)?;
        j += 1;
        total.add(&out.op_counts);
        if out.accepted || j >= max_attempts.max(1) {
            out.op_counts = total;
            out.repeats_used = j;
            return Ok(out);
        }
    }
}

/// Single attempt with its full transcript.
pub fn run_protocol_traced(
    dir: &TreeDirectory,
    cred: &TagCredential,
    stream: &SeededStream,
) -> Result<(ProtocolOutcome, Transcript)> {
    attempt(
        dir,
        cred,
        &stream.substream("attempt", 0),
        RunOptions::default(),
    )
}
