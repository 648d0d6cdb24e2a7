use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Baseline, SimConfig};
use super::stats::{AggregateStats, Tally, Timing};
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVector};
use crate::hb::{
    auth_noise, hbplus_reader_expected, hbplus_tag_respond, verify_threshold, HbPlusKeys,
};
use crate::rng::SeededStream;
use crate::tree::{
    run_protocol_with, setup_system, MasterSecret, NodePath, OpCounts, ProtocolOutcome, RunOptions,
    TagCredential, TreeDirectory,
};

/// What one trial produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialReport {
    pub outcome: ProtocolOutcome,
    pub legitimate: bool,
    /// Levels decided after leaving the tag's path; at most `d`.
    pub wrong_branch_levels: u32,
    /// Legitimate tag resolved to a leaf other than its own.
    pub wrong_leaf: bool,
    pub wall_nanos: u64,
}

/// Registered population shared by all trials.
pub struct Population {
    pub dir: TreeDirectory,
    pub creds: Vec<TagCredential>,
}

/// Builds the directory and registers `n_tags` tags with ids `0..n_tags`.
pub fn build_population(cfg: &SimConfig) -> Result<Population> {
    let mut s = cfg.root_seed.stream("setup", 0);
    let mut dir = setup_system(cfg.n_tags, cfg.params.clone(), &mut s)?;
    let creds = (0..cfg.n_tags)
        .map(|t| dir.register_tag(t, &mut s))
        .collect::<Result<_>>()?;
    Ok(Population { dir, creds })
}

pub(crate) fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))
}

fn is_impostor(cfg: &SimConfig, stream: &SeededStream) -> bool {
    let u = stream.substream("role", 0).below(1 << 53) as f64 / (1u64 << 53) as f64;
    u < cfg.impostor_fraction
}

/// Picks the trial's tag: a registered one, or a fresh impostor.
fn trial_tag<'a>(
    cfg: &SimConfig,
    pop: &'a Population,
    stream: &SeededStream,
) -> (std::borrow::Cow<'a, TagCredential>, bool) {
    if is_impostor(cfg, stream) {
        let imp = TagCredential::impostor(&cfg.params, &mut stream.substream("impostor", 0));
        (std::borrow::Cow::Owned(imp), false)
    } else {
        let i = stream.substream("pick", 0).below(pop.creds.len() as u64) as usize;
        (std::borrow::Cow::Borrowed(&pop.creds[i]), true)
    }
}

fn tally_of(report: &TrialReport) -> Tally {
    let o = &report.outcome;
    let mut t = Tally {
        trials: 1,
        ops: o.op_counts,
        ..Default::default()
    };
    if report.legitimate {
        t.legit_trials = 1;
        t.legit_rejects = u64::from(!o.accepted);
        t.legit_attempts = o.repeats_used as u64;
        t.false_branch_events = u64::from(o.first_wrong_level.is_some());
        t.on_path_levels = o.levels_on_path as u64;
        t.legit_wrong_leaf = u64::from(report.wrong_leaf);
    } else {
        t.impostor_trials = 1;
        t.impostor_accepts = u64::from(o.accepted);
    }
    t
}

fn run_trials<F>(cfg: &SimConfig, trial: F) -> Result<AggregateStats>
where
    F: Fn(u64, &SeededStream) -> Result<TrialReport> + Sync,
{
    let out: Result<(Tally, Vec<u64>)> = pool(cfg.workers)?.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| {
                let stream = cfg.root_seed.stream("trial", i);
                let start = cfg.record_timing.then(Instant::now);
                let mut rep = trial(i, &stream)?;
                if let Some(t0) = start {
                    rep.wall_nanos = t0.elapsed().as_nanos() as u64;
                }
                Ok((tally_of(&rep), rep.wall_nanos))
            })
            .try_fold(
                || (Tally::default(), Vec::new()),
                |(acc, mut times), r: Result<(Tally, u64)>| {
                    let (t, ns) = r?;
                    if cfg.record_timing {
                        times.push(ns);
                    }
                    Ok((acc.merge(t), times))
                },
            )
            .try_reduce(
                || (Tally::default(), Vec::new()),
                |(a, mut ta), (b, tb)| {
                    ta.extend(tb);
                    Ok((a.merge(b), ta))
                },
            )
    });
    let (tally, mut times) = out?;
    times.sort_unstable();
    Ok(AggregateStats::from_tally(
        &cfg.config_id,
        tally,
        Timing::from_samples(&times),
    ))
}

fn wrong_levels(o: &ProtocolOutcome, d: u32) -> u32 {
    o.first_wrong_level.map_or(0, |l| d - l + 1)
}

/// Monte Carlo run of the key-tree protocol; trial `i` draws everything from
/// `stream(root, "trial", i)`.
pub fn simulate_tree_protocol(cfg: &SimConfig) -> Result<AggregateStats> {
    cfg.validate()?;
    let pop = build_population(cfg)?;
    simulate_tree_on(cfg, &pop)
}

/// As [`simulate_tree_protocol`] on a prebuilt population.
pub fn simulate_tree_on(cfg: &SimConfig, pop: &Population) -> Result<AggregateStats> {
    let attempts = if cfg.iterate { cfg.params.s } else { 1 };
    run_trials(cfg, |_, stream| {
        let (cred, legitimate) = trial_tag(cfg, pop, stream);
        let forced_leaf = if !cfg.force_target_leaf {
            None
        } else if legitimate {
            cred.leaf
        } else {
            let i = stream.substream("target", 0).below(pop.creds.len() as u64) as usize;
            pop.creds[i].leaf
        };
        let outcome = run_protocol_with(
            &pop.dir,
            &cred,
            &stream.substream("run", 0),
            RunOptions { forced_leaf },
            attempts,
        )?;
        Ok(TrialReport {
            wrong_branch_levels: wrong_levels(&outcome, cfg.params.d),
            wrong_leaf: legitimate && cred.leaf != Some(outcome.identified_leaf),
            outcome,
            legitimate,
            wall_nanos: 0,
        })
    })
}

/// The reader checks the HB+ response against every registered tag and
/// accepts if any passes.
pub fn simulate_exhaustive_search(cfg: &SimConfig) -> Result<AggregateStats> {
    cfg.validate()?;
    let pop = build_population(cfg)?;
    let keys: Vec<HbPlusKeys> = pop.creds.iter().map(TagCredential::auth_keys).collect();
    let p = &cfg.params;
    let n = keys.len() as u64;
    let mut stats = run_trials(cfg, |_, stream| {
        let (cred, legitimate) = trial_tag(cfg, &pop, stream);
        let mut tag_s = stream.substream("tag", 0);
        let mut reader_s = stream.substream("reader", 0);
        let b_m = BitMatrix::random(p.r, p.k_y, &mut tag_s);
        let a_m = BitMatrix::random(p.r, p.k_x, &mut reader_s);
        let noise = auth_noise(&mut tag_s, p);
        let z = hbplus_tag_respond(&a_m, &b_m, &cred.auth_keys(), &noise)?;
        let mut best = (usize::MAX, 0usize);
        for (idx, k) in keys.iter().enumerate() {
            let v = verify_threshold(&z, &hbplus_reader_expected(&a_m, &b_m, k)?, p.tau)?;
            if v.distance < best.0 {
                best = (v.distance, idx);
            }
        }
        let (distance, idx) = best;
        let identified_leaf = pop.creds[idx].leaf.expect("registered");
        let r = p.r as u64;
        let outcome = ProtocolOutcome {
            identified_leaf,
            accepted: distance <= p.tau,
            distance,
            repeats_used: 1,
            op_counts: OpCounts {
                reader_matvec: 2 * n,
                tag_matvec: 2,
                bits_sent: r * p.k_y as u64 + r,
                bits_received: r * p.k_x as u64,
            },
            first_wrong_level: None,
            levels_on_path: 0,
        };
        Ok(TrialReport {
            wrong_branch_levels: 0,
            wrong_leaf: legitimate && cred.leaf != Some(identified_leaf),
            outcome,
            legitimate,
            wall_nanos: 0,
        })
    })?;
    stats.tally.verifications = stats.tally.trials * n;
    Ok(stats)
}

/// PRF output and nonce length in bits.
pub const PRF_BITS: usize = 128;

fn prf_key(master: &MasterSecret, path: &NodePath) -> BitVector {
    master.expand(b"hbtree/prf-node/v1", path.encode().as_bytes(), PRF_BITS)
}

/// Keyed SHA-256 truncated to 128 bits.
fn prf(key: &BitVector, nonce: &BitVector) -> [u8; 16] {
    let mut h = Sha256::new();
    h.update(b"hbtree/prf/v1");
    h.update(key.to_hex());
    h.update(nonce.to_hex());
    let full: [u8; 32] = h.finalize().into();
    full[..16].try_into().expect("16 bytes")
}

/// Tree of PRF keys: at each level the tag sends `PRF_k(nonce)` and the reader
/// finds the child whose key reproduces it exactly.
pub fn simulate_tree_prf_baseline(cfg: &SimConfig) -> Result<AggregateStats> {
    cfg.validate()?;
    let p = &cfg.params;
    let mut s = cfg.root_seed.stream("setup", 0);
    let master = MasterSecret::generate(&mut s);
    let mut dir = setup_system(cfg.n_tags, p.clone(), &mut s)?;
    let leaves: Vec<u64> = (0..cfg.n_tags)
        .map(|t| dir.register_tag(t, &mut s).map(|c| c.leaf.expect("leaf")))
        .collect::<Result<_>>()?;
    let (beta, d) = (p.beta, p.d);

    run_trials(cfg, |_, stream| {
        let impostor = is_impostor(cfg, stream);
        let mut tag_s = stream.substream("tag", 0);
        let true_path = if impostor {
            None
        } else {
            let i = stream.substream("pick", 0).below(leaves.len() as u64) as usize;
            Some(NodePath::of_leaf(leaves[i], beta, d)?)
        };
        let nonce = BitVector::random(PRF_BITS, &mut tag_s);
        let msgs: Vec<[u8; 16]> = (1..=d as usize)
            .map(|lvl| match &true_path {
                Some(path) => prf(&prf_key(&master, &path.prefix(lvl)), &nonce),
                None => prf(&BitVector::random(PRF_BITS, &mut tag_s), &nonce),
            })
            .collect();

        let mut prefix: Vec<u64> = Vec::new();
        for m in &msgs {
            let hit = (0..beta).find(|&c| {
                let mut idx = prefix.clone();
                idx.push(c);
                let node = NodePath::new(idx, beta, d).expect("valid");
                prf(&prf_key(&master, &node), &nonce) == *m
            });
            match hit {
                Some(c) => prefix.push(c),
                None => break,
            }
        }
        let accepted = prefix.len() == d as usize;
        let leaf = if accepted {
            prefix.iter().fold(0, |acc, &i| acc * beta + i)
        } else {
            0
        };
        let outcome = ProtocolOutcome {
            identified_leaf: leaf,
            accepted,
            distance: 0,
            repeats_used: 1,
            op_counts: OpCounts {
                reader_matvec: d as u64 * beta,
                tag_matvec: d as u64,
                bits_sent: (d as usize * PRF_BITS + PRF_BITS) as u64,
                bits_received: 0,
            },
            first_wrong_level: None,
            levels_on_path: 0,
        };
        Ok(TrialReport {
            wrong_branch_levels: if accepted || impostor {
                0
            } else {
                d - prefix.len() as u32
            },
            wrong_leaf: !impostor && true_path.as_ref().map(|p| p.to_leaf(beta)) != Some(leaf),
            outcome,
            legitimate: !impostor,
            wall_nanos: 0,
        })
    })
}

/// Runs the baseline named in the config.
pub fn simulate(cfg: &SimConfig) -> Result<AggregateStats> {
    match cfg.baseline {
        Baseline::TreeHb => simulate_tree_protocol(cfg),
        Baseline::ExhaustiveHb => simulate_exhaustive_search(cfg),
        Baseline::TreePrf => simulate_tree_prf_baseline(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::NoiseRate;
    use crate::hb::ProtocolParams;
    use crate::rng::RootSeed;

    fn params(eps: NoiseRate) -> ProtocolParams {
        ProtocolParams {
            eps,
            k_x: 32,
            k_y: 64,
            r: 48,
            r_tr: 48,
            tau: 12,
            d: 2,
            beta: 8,
            s: 1,
            checked_noise: false,
        }
    }

    #[test]
    fn zero_noise_is_error_free() {
        let mut cfg = SimConfig::new(params(NoiseRate::Zero), 50, 500, RootSeed::from_u64(1));
        cfg.impostor_fraction = 0.0;
        let st = simulate_tree_protocol(&cfg).unwrap();
        assert_eq!(st.frr.successes, 0);
        assert_eq!(st.per_level_false_branch.successes, 0);
        assert_eq!(st.tally.on_path_levels, 1000);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let mut cfg = SimConfig::new(
            params(NoiseRate::Dyadic { k: 2 }),
            50,
            300,
            RootSeed::from_u64(2),
        );
        cfg.impostor_fraction = 0.3;
        let a = simulate_tree_protocol(&cfg).unwrap();
        cfg.workers = 3;
        assert_eq!(simulate_tree_protocol(&cfg).unwrap(), a);
    }

    #[test]
    fn prf_baseline_is_exact() {
        let mut cfg = SimConfig::new(
            params(NoiseRate::Dyadic { k: 2 }),
            40,
            400,
            RootSeed::from_u64(3),
        );
        cfg.impostor_fraction = 0.5;
        cfg.baseline = Baseline::TreePrf;
        let st = simulate(&cfg).unwrap();
        assert_eq!(st.frr.successes, 0);
        assert_eq!(st.far.successes, 0);
        assert!(st.tally.legit_trials > 0 && st.tally.impostor_trials > 0);
        assert_eq!(st.tally.ops.reader_matvec, 400 * 2 * 8);
        assert_eq!(st.tally.ops.total_bits(), 400 * (2 * 128 + 128));
    }

    #[test]
    fn single_tag_exhaustive_matches_plain_hbplus() {
        let mut cfg = SimConfig::new(
            params(NoiseRate::Dyadic { k: 2 }),
            1,
            400,
            RootSeed::from_u64(4),
        );
        cfg.baseline = Baseline::ExhaustiveHb;
        let st = simulate(&cfg).unwrap();
        assert_eq!(st.tally.verifications, 400);
        // FRR_auth(48, 12, 1/4) = 0.4556; 400 trials give sd 0.025.
        assert!(
            (st.frr.estimate - 0.4556).abs() < 0.1,
            "{}",
            st.frr.estimate
        );
    }

    #[test]
    fn timing_is_optional() {
        let mut cfg = SimConfig::new(
            params(NoiseRate::Dyadic { k: 2 }),
            5,
            10,
            RootSeed::from_u64(5),
        );
        assert!(simulate(&cfg).unwrap().timing.is_none());
        cfg.record_timing = true;
        assert!(simulate(&cfg).unwrap().timing.is_some());
    }
}
