use serde::{Deserialize, Serialize};

use super::branch::{pf_pmf, pt_pmf};
use super::prob::Probability;

/// Probability that the noise vector has more than `tau` ones.
/// `tau >= r` gives zero.
pub fn frr_auth<T: Probability>(r: u32, tau: u32, eps: &T) -> T {
    ((tau.saturating_add(1))..=r).fold(T::zero(), |acc, i| acc + pt_pmf(i, r, eps))
}

/// Probability that a uniform response lands within distance `tau`.
pub fn far_auth<T: Probability>(r: u32, tau: u32) -> T {
    (0..=tau.min(r)).fold(T::zero(), |acc, i| acc + pf_pmf(i, r))
}

/// `d * p_fb + frr_a`, clamped to 1.
pub fn combined_frr<T: Probability>(d: u32, p_fb: &T, frr_a: &T) -> T {
    let d = T::from_ratio(d as u64, 1);
    (d * p_fb.clone() + frr_a.clone()).min(T::one())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IteratedRates<T> {
    pub frr: T,
    pub far: T,
    /// Expected number of runs, `sum_{j<s} gamma^j`.
    pub expected_cost_factor: T,
}

/// Rates of up to `s` repetitions of a run with FRR `gamma` and FAR `delta`.
pub fn iterated_rates<T: Probability>(gamma: &T, delta: &T, s: u32) -> IteratedRates<T> {
    let s = s.max(1);
    let mut factor = T::zero();
    let mut g = T::one();
    for _ in 0..s {
        factor = factor + g.clone();
        g = g * gamma.clone();
    }
    IteratedRates {
        frr: g,
        far: T::from_ratio(s as u64, 1) * delta.clone(),
        expected_cost_factor: factor,
    }
}
