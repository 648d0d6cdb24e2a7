use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hb::ProtocolParams;
use crate::rng::RootSeed;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Key-tree traversal followed by HB+ authentication.
    #[default]
    TreeHb,
    /// HB+ verification against every registered tag.
    ExhaustiveHb,
    /// Key tree with exact PRF matching at each level.
    TreePrf,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    #[default]
    ErrorRates,
    Privacy,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    RandomGuess,
    #[default]
    KeyKnowing,
}

/// One experiment. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_id")]
    pub config_id: String,
    pub params: ProtocolParams,
    /// Population `N`.
    pub n_tags: u64,
    pub trials: u64,
    #[serde(default)]
    pub impostor_fraction: f64,
    /// Adversary session budget `q` in the privacy game.
    #[serde(default = "default_q")]
    pub q_sessions: u32,
    pub root_seed: RootSeed,
    #[serde(default)]
    pub baseline: Baseline,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub experiment: Experiment,
    #[serde(default)]
    pub adversary: AdversaryKind,
    /// Run up to `params.s` attempts per trial.
    #[serde(default)]
    pub iterate: bool,
    /// Authenticate against a chosen leaf instead of the descent result.
    /// Legitimate tags use their own leaf, impostors a random registered one.
    #[serde(default)]
    pub force_target_leaf: bool,
    /// Collect per-trial wall-clock time. Never written to reports.
    #[serde(default)]
    pub record_timing: bool,
}

fn default_id() -> String {
    "sim".into()
}

fn default_q() -> u32 {
    2
}

fn default_workers() -> usize {
    1
}

impl SimConfig {
    pub fn new(params: ProtocolParams, n_tags: u64, trials: u64, root_seed: RootSeed) -> Self {
        Self {
            config_id: default_id(),
            params,
            n_tags,
            trials,
            impostor_fraction: 0.0,
            q_sessions: default_q(),
            root_seed,
            baseline: Baseline::TreeHb,
            workers: 1,
            experiment: Experiment::ErrorRates,
            adversary: AdversaryKind::KeyKnowing,
            iterate: false,
            force_target_leaf: false,
            record_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        self.params
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.n_tags == 0 {
            return fail("n_tags must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.impostor_fraction) {
            return fail(format!(
                "impostor_fraction {} outside [0, 1]",
                self.impostor_fraction
            ));
        }
        let cap = self.params.capacity().expect("validated");
        if self.n_tags > cap {
            return fail(format!(
                "n_tags {} exceeds tree capacity {cap}",
                self.n_tags
            ));
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        if self.experiment == Experiment::Privacy && self.n_tags < 2 {
            return fail("the privacy game needs at least two tags".into());
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
