use serde::{Deserialize, Serialize};

use super::prob::Probability;
use crate::error::{Error, Result};
use crate::gf2::NoiseRate;

/// `P_t(i)`: probability that the true child's response differs in `i` bits.
pub fn pt_pmf<T: Probability>(i: u32, r: u32, eps: &T) -> T {
    T::binom_pmf(r, i, eps)
}

/// `P_f(i)`: the same for a uniformly random (false) child.
pub fn pf_pmf<T: Probability>(i: u32, r: u32) -> T {
    T::binom_pmf(r, i, &T::from_ratio(1, 2))
}

pub fn pt_table<T: Probability>(r: u32, eps: &T) -> Vec<T> {
    (0..=r).map(|i| pt_pmf(i, r, eps)).collect()
}

pub fn pf_table<T: Probability>(r: u32) -> Vec<T> {
    (0..=r).map(|i| pf_pmf(i, r)).collect()
}

/// `cdf[i] = sum_{j < i} P_f(j)`, so `cdf[0] = 0`.
fn pf_strict_cdf<T: Probability>(r: u32) -> Vec<T> {
    let mut out = Vec::with_capacity(r as usize + 2);
    let mut acc = T::zero();
    out.push(acc.clone());
    for p in pf_table::<T>(r) {
        acc = acc + p;
        out.push(acc.clone());
    }
    out
}

/// Exponent applied to the per-sibling miss probability.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiblingExponent {
    /// One factor per child, `beta`.
    #[default]
    Beta,
    /// One factor per false sibling, `beta - 1`.
    BetaMinusOne,
}

impl SiblingExponent {
    pub fn apply(self, beta: u64) -> u64 {
        match self {
            Self::Beta => beta,
            Self::BetaMinusOne => beta - 1,
        }
    }
}

/// Binary tree: `sum_{i=1}^{r} P_t(i) sum_{j<i} P_f(j)`.
pub fn false_branch_binary<T: Probability>(r: u32, eps: &T) -> T {
    false_branch_with_exponent(r, eps, 1)
}

/// `sum_{i=1}^{r} P_t(i) [1 - (1 - sum_{j<i} P_f(j))^e]`.
pub fn false_branch_with_exponent<T: Probability>(r: u32, eps: &T, e: u64) -> T {
    let cdf = pf_strict_cdf::<T>(r);
    (1..=r).fold(T::zero(), |acc, i| {
        acc + pt_pmf(i, r, eps) * T::one_minus_complement_pow(&cdf[i as usize], e)
    })
}

/// Any fan-out: some sibling comes strictly closer than the true child.
pub fn false_branch_general<T: Probability>(
    r: u32,
    eps: &T,
    beta: u64,
    exponent: SiblingExponent,
) -> T {
    false_branch_with_exponent(r, eps, exponent.apply(beta))
}

/// Exact wrong-branch probability of the descent rule itself: `beta - 1`
/// false siblings, ties between equally close children broken uniformly.
///
/// With a uniformly placed true child this equals lowest-index tie-breaking.
pub fn false_branch_tie_aware<T: Probability>(r: u32, eps: &T, beta: u64) -> T {
    let cdf = pf_strict_cdf::<T>(r);
    let correct = (0..=r).fold(T::zero(), |acc, i| {
        // a: sibling not strictly closer; b: sibling strictly farther.
        let a = T::one() - cdf[i as usize].clone();
        let b = T::one() - cdf[i as usize + 1].clone();
        acc + pt_pmf(i, r, eps) * T::pow_diff_quotient(&a, &b, beta)
    });
    T::one() - correct
}

/// Fan-out, noise and response length of one descent step.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchModel<T> {
    pub r: u32,
    pub eps: T,
    pub beta: u64,
}

impl<T: Probability> BranchModel<T> {
    pub fn new(r: u32, eps: T, beta: u64) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidParams("r must be positive".into()));
        }
        if beta < 2 {
            return Err(Error::InvalidParams("beta must be at least 2".into()));
        }
        if !(eps > T::zero() && eps < T::from_ratio(1, 2)) {
            return Err(Error::InvalidParams("eps must lie in (0, 1/2)".into()));
        }
        Ok(Self { r, eps, beta })
    }

    pub fn false_siblings(&self) -> u64 {
        self.beta - 1
    }

    pub fn false_branch(&self, exponent: SiblingExponent) -> T {
        false_branch_general(self.r, &self.eps, self.beta, exponent)
    }

    pub fn false_branch_tie_aware(&self) -> T {
        false_branch_tie_aware(self.r, &self.eps, self.beta)
    }
}

/// Mean and variance of the true-child distance, a false-child distance and
/// their gap `false - true`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMoments {
    pub mu_t: f64,
    pub sigma_t_sq: f64,
    pub mu_f: f64,
    pub sigma_f_sq: f64,
    pub mu: f64,
    pub sigma_sq: f64,
}

impl GaussianMoments {
    pub fn new(r: u32, eps: f64) -> Self {
        let r = r as f64;
        let mu_t = eps * r;
        let sigma_t_sq = eps * (1.0 - eps) * r;
        let mu_f = r / 2.0;
        let sigma_f_sq = r / 4.0;
        Self {
            mu_t,
            sigma_t_sq,
            mu_f,
            sigma_f_sq,
            mu: mu_f - mu_t,
            sigma_sq: sigma_t_sq + sigma_f_sq,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma_sq.sqrt()
    }
}

/// How the Gaussian tail is written.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErfcConvention {
    /// `erfc(mu / (sigma sqrt 2))`, the form matching the published numbers.
    #[default]
    Compat,
    /// `1/2 erfc(mu / (sigma sqrt 2))`, the actual normal tail.
    Standard,
}

/// Normal approximation of the binary false-branch probability; only defined
/// for `eps = 1/4`, where it reduces to `erfc(sqrt(r / 14))`.
pub fn false_branch_normal_approx(
    r: u32,
    eps: NoiseRate,
    convention: ErfcConvention,
) -> Result<f64> {
    if eps != (NoiseRate::Dyadic { k: 2 }) {
        return Err(Error::InvalidParams(format!(
            "normal approximation is only derived for eps = 0.25, got {eps}"
        )));
    }
    let m = GaussianMoments::new(r, 0.25);
    let tail = libm::erfc(m.mu / (m.sigma() * std::f64::consts::SQRT_2));
    Ok(match convention {
        ErfcConvention::Compat => tail,
        ErfcConvention::Standard => tail / 2.0,
    })
}
