use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AdversaryKind, SimConfig};
use super::run::{build_population, pool, Population};
use super::stats::Rate;
use crate::error::{Error, Result};
use crate::gf2::{hamming_distance, BitVector};
use crate::rng::SeededStream;
use crate::tree::{run_protocol_traced, TagCredential, Transcript};

/// What the eavesdropper gets: session transcripts plus the two candidates.
pub struct AdversaryView<'a> {
    pub sessions: &'a [Transcript],
    pub t0: &'a TagCredential,
    pub t1: &'a TagCredential,
    pub r_tr: usize,
}

/// Guesses whether the sessions came from two tags (`true`) or one.
pub trait Adversary: Sync {
    fn guess(&self, view: &AdversaryView<'_>, coins: &mut SeededStream) -> Result<bool>;
}

/// Ignores the view and flips a coin.
pub struct RandomGuess;

impl Adversary for RandomGuess {
    fn guess(&self, _: &AdversaryView<'_>, coins: &mut SeededStream) -> Result<bool> {
        Ok(coins.coin())
    }
}

/// Holds both candidates' path keys and attributes each session to the
/// closer path; answers "two tags" if any session points at `t1`.
pub struct KeyKnowing;

fn path_distance(tr: &Transcript, keys: &[BitVector], r_tr: usize) -> Result<usize> {
    keys.iter().zip(&tr.z_levels).try_fold(0, |acc, (y, z)| {
        Ok(acc + hamming_distance(&tr.b_m.mul_vec_top(y, r_tr)?, z)?)
    })
}

impl Adversary for KeyKnowing {
    fn guess(&self, view: &AdversaryView<'_>, _: &mut SeededStream) -> Result<bool> {
        for tr in view.sessions {
            let d0 = path_distance(tr, &view.t0.path_keys, view.r_tr)?;
            let d1 = path_distance(tr, &view.t1.path_keys, view.r_tr)?;
            if d1 < d0 {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyResult {
    /// Games the adversary won.
    pub correct: Rate,
    /// `2 Pr[correct] - 1`.
    pub advantage: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Two distinct registered tags chosen uniformly.
fn pick_pair<'a>(
    pop: &'a Population,
    s: &mut SeededStream,
) -> (&'a TagCredential, &'a TagCredential) {
    let n = pop.creds.len() as u64;
    let i = s.below(n);
    let j = (i + 1 + s.below(n - 1)) % n;
    (&pop.creds[i as usize], &pop.creds[j as usize])
}

/// Repeats the coin-toss linkability game `cfg.trials` times.
///
/// Game `i` uses `stream(root, "trial", i)`: coin `b`; `q` sessions that
/// alternate `t0, t1` when `b` is set and are all `t0` otherwise.
pub fn privacy_experiment(cfg: &SimConfig, adversary: &dyn Adversary) -> Result<PrivacyResult> {
    cfg.validate()?;
    if cfg.n_tags < 2 {
        return Err(Error::Config(
            "the privacy game needs at least two tags".into(),
        ));
    }
    if cfg.q_sessions == 0 {
        // The view carries no sessions, so it is independent of the coin.
        return Ok(PrivacyResult {
            correct: Rate::new(cfg.trials / 2, cfg.trials),
            advantage: 0.0,
            ci_lo: 0.0,
            ci_hi: 0.0,
        });
    }
    let pop = build_population(cfg)?;
    let r_tr = cfg.params.r_tr;
    let wins: Result<u64> = pool(cfg.workers)?.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| -> Result<u64> {
                let stream = cfg.root_seed.stream("trial", i);
                let mut game = stream.substream("game", 0);
                let (t0, t1) = pick_pair(&pop, &mut game);
                let b = game.coin();
                let sessions = (0..cfg.q_sessions)
                    .map(|j| {
                        let tag = if b && j % 2 == 1 { t1 } else { t0 };
                        run_protocol_traced(&pop.dir, tag, &stream.substream("session", j as u64))
                            .map(|(_, tr)| tr)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let view = AdversaryView {
                    sessions: &sessions,
                    t0,
                    t1,
                    r_tr,
                };
                let g = adversary.guess(&view, &mut stream.substream("adversary", 0))?;
                Ok(u64::from(g == b))
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))
    });
    let correct = Rate::new(wins?, cfg.trials);
    Ok(PrivacyResult {
        correct,
        advantage: 2.0 * correct.estimate - 1.0,
        ci_lo: 2.0 * correct.ci_lo - 1.0,
        ci_hi: 2.0 * correct.ci_hi - 1.0,
    })
}

/// Runs the adversary named in the config.
pub fn run_privacy(cfg: &SimConfig) -> Result<PrivacyResult> {
    match cfg.adversary {
        AdversaryKind::RandomGuess => privacy_experiment(cfg, &RandomGuess),
        AdversaryKind::KeyKnowing => privacy_experiment(cfg, &KeyKnowing),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::NoiseRate;
    use crate::hb::ProtocolParams;
    use crate::rng::RootSeed;

    fn cfg(q: u32, trials: u64) -> SimConfig {
        let p = ProtocolParams {
            eps: NoiseRate::Dyadic { k: 2 },
            k_x: 32,
            k_y: 64,
            r: 48,
            r_tr: 48,
            tau: 12,
            d: 2,
            beta: 4,
            s: 1,
            checked_noise: false,
        };
        let mut c = SimConfig::new(p, 16, trials, RootSeed::from_u64(9));
        c.q_sessions = q;
        c
    }

    #[test]
    fn zero_sessions_give_zero_advantage() {
        let r = privacy_experiment(&cfg(0, 100), &KeyKnowing).unwrap();
        assert_eq!(r.advantage, 0.0);
    }

    #[test]
    fn key_knowing_distinguishes() {
        let r = privacy_experiment(&cfg(2, 400), &KeyKnowing).unwrap();
        assert!(r.advantage >= 0.9, "{r:?}");
    }

    #[test]
    fn random_guess_is_near_zero() {
        let r = privacy_experiment(&cfg(2, 2000), &RandomGuess).unwrap();
        assert!(r.ci_lo <= 0.0 && 0.0 <= r.ci_hi, "{r:?}");
    }

    #[test]
    fn one_session_reveals_nothing_to_key_knowing() {
        // With q = 1 both branches of the coin produce a single t0 session.
        let r = privacy_experiment(&cfg(1, 2000), &KeyKnowing).unwrap();
        assert!(r.ci_lo <= 0.0 && 0.0 <= r.ci_hi, "{r:?}");
    }
}
