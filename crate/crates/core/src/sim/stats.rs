use serde::{Deserialize, Serialize};

use crate::tree::OpCounts;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // Rounding can leave the bounds a few ulps off the point estimate.
    ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0))
}

/// A binomial proportion with its 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl Rate {
    pub fn new(successes: u64, trials: u64) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(successes, trials, Z95);
        let estimate = if trials == 0 {
            0.0
        } else {
            successes as f64 / trials as f64
        };
        Self {
            successes,
            trials,
            estimate,
            ci_lo,
            ci_hi,
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        (self.ci_lo..=self.ci_hi).contains(&p)
    }

    /// Binomial standard error of the estimate.
    pub fn std_err(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        (self.estimate * (1.0 - self.estimate) / self.trials as f64).sqrt()
    }

    pub fn overlaps(&self, other: &Rate) -> bool {
        self.ci_lo <= other.ci_hi && other.ci_lo <= self.ci_hi
    }
}

/// Order-insensitive per-trial accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub trials: u64,
    pub legit_trials: u64,
    pub impostor_trials: u64,
    pub legit_rejects: u64,
    pub impostor_accepts: u64,
    pub legit_wrong_leaf: u64,
    pub false_branch_events: u64,
    pub on_path_levels: u64,
    pub legit_attempts: u64,
    pub verifications: u64,
    pub ops: OpCounts,
}

impl Tally {
    pub fn merge(mut self, o: Tally) -> Tally {
        self.trials += o.trials;
        self.legit_trials += o.legit_trials;
        self.impostor_trials += o.impostor_trials;
        self.legit_rejects += o.legit_rejects;
        self.impostor_accepts += o.impostor_accepts;
        self.legit_wrong_leaf += o.legit_wrong_leaf;
        self.false_branch_events += o.false_branch_events;
        self.on_path_levels += o.on_path_levels;
        self.legit_attempts += o.legit_attempts;
        self.verifications += o.verifications;
        self.ops.add(&o.ops);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub mean_nanos: f64,
    pub stdev_nanos: f64,
}

impl Timing {
    pub fn from_samples(samples: &[u64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let n = samples.len() as f64;
        let mean = samples.iter().map(|&x| x as f64).sum::<f64>() / n;
        let var = samples
            .iter()
            .map(|&x| (x as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        Some(Self {
            mean_nanos: mean,
            stdev_nanos: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub config_id: String,
    pub tally: Tally,
    pub frr: Rate,
    pub far: Rate,
    pub per_level_false_branch: Rate,
    /// Mean attempts per legitimate trial.
    pub mean_repeats: f64,
    pub timing: Option<Timing>,
}

impl AggregateStats {
    pub fn from_tally(config_id: &str, tally: Tally, timing: Option<Timing>) -> Self {
        let mean_repeats = if tally.legit_trials == 0 {
            0.0
        } else {
            tally.legit_attempts as f64 / tally.legit_trials as f64
        };
        Self {
            config_id: config_id.to_string(),
            frr: Rate::new(tally.legit_rejects, tally.legit_trials),
            far: Rate::new(tally.impostor_accepts, tally.impostor_trials),
            per_level_false_branch: Rate::new(tally.false_branch_events, tally.on_path_levels),
            mean_repeats,
            tally,
            timing,
        }
    }

    pub fn per_trial(&self, total: u64) -> f64 {
        if self.tally.trials == 0 {
            0.0
        } else {
            total as f64 / self.tally.trials as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // Hand-computed: 10 of 100 at z = 1.96.
        let (lo, hi) = wilson_interval(10, 100, Z95);
        assert!((lo - 0.05523).abs() < 1e-4, "{lo}");
        assert!((hi - 0.17437).abs() < 1e-4, "{hi}");
        let (lo, hi) = wilson_interval(0, 1000, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.004);
    }

    #[test]
    fn rate_contains_estimate() {
        for (s, n) in [(0u64, 10u64), (3, 10), (10, 10), (5, 1_000_000)] {
            let r = Rate::new(s, n);
            assert!(r.contains(r.estimate));
        }
    }

    #[test]
    fn merge_is_commutative() {
        let a = Tally {
            trials: 3,
            legit_rejects: 1,
            ..Default::default()
        };
        let b = Tally {
            trials: 5,
            impostor_accepts: 2,
            ..Default::default()
        };
        assert_eq!(a.merge(b), b.merge(a));
    }
}
