use serde::{Deserialize, Serialize};

use super::auth::{combined_frr, far_auth, frr_auth, iterated_rates};
use super::branch::SiblingExponent;
use super::cost::{cost_model_with_factor, planning_false_branch, CostReport, MAX_RESPONSE_LENGTH};
use crate::error::{Error, Result};
use crate::gf2::NoiseRate;
use crate::hb::ProtocolParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub n: u64,
    pub target_frr: f64,
    pub target_far: f64,
    pub eps: NoiseRate,
    pub d: u32,
    /// Most repetitions allowed.
    pub s_max: u32,
    /// Override the default key lengths for `eps`.
    pub k_x: Option<usize>,
    pub k_y: Option<usize>,
    pub exponent: SiblingExponent,
}

impl PlanRequest {
    pub fn new(n: u64, target_frr: f64, target_far: f64, eps: NoiseRate, d: u32) -> Self {
        Self {
            n,
            target_frr,
            target_far,
            eps,
            d,
            s_max: 4,
            k_x: None,
            k_y: None,
            exponent: SiblingExponent::Beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub params: ProtocolParams,
    pub p_false_branch: f64,
    pub frr_auth: f64,
    pub far_auth: f64,
    /// FRR of a single run.
    pub gamma: f64,
    pub predicted_frr: f64,
    pub predicted_far: f64,
    pub cost: CostReport,
}

/// Key lengths `(k_x, k_y)` for the two supported noise rates.
pub fn default_key_lengths(eps: NoiseRate) -> Result<(usize, usize)> {
    match eps {
        NoiseRate::Dyadic { k: 2 } => Ok((80, 330)),
        NoiseRate::Dyadic { k: 3 } => Ok((80, 440)),
        other => Err(Error::InvalidParams(format!(
            "no default key lengths for eps = {other}; pass k_x and k_y"
        ))),
    }
}

/// Smallest `beta` with `beta^d >= n`.
pub fn branching_factor(n: u64, d: u32) -> Result<u64> {
    if d == 0 {
        return Err(Error::InvalidParams("depth must be at least 1".into()));
    }
    let guess = (n.max(1) as f64).powf(1.0 / d as f64).floor() as u64;
    (guess.saturating_sub(1).max(2)..)
        .find(|b| b.checked_pow(d).map_or(true, |c| c >= n))
        .ok_or_else(|| Error::Infeasible("branching factor overflow".into()))
}

/// Chooses parameters for population `n`.
///
/// Each run gets FRR budget `gamma_max = target_frr^(1/s_max)` and FAR budget
/// `delta_max = target_far / s_max`. Scanning `r` upward, `tau` is the largest
/// threshold with `far_auth <= delta_max`; the first `r` whose `frr_auth` is at
/// most `gamma_max / 2` wins. `r_tr` is the smallest length with
/// `d * P_fb <= frr_auth`, and `s` the fewest repeats meeting the FRR target.
pub fn plan_parameters(req: &PlanRequest) -> Result<PlanResult> {
    if !(req.target_frr > 0.0
        && req.target_frr < 1.0
        && req.target_far > 0.0
        && req.target_far < 1.0)
    {
        return Err(Error::Infeasible("targets must lie in (0, 1)".into()));
    }
    if req.eps == NoiseRate::Zero {
        return Err(Error::InvalidParams(
            "planning needs a positive noise rate".into(),
        ));
    }
    let s_max = req.s_max.max(1);
    let beta = branching_factor(req.n, req.d)?;
    let (dk_x, dk_y) = match (req.k_x, req.k_y) {
        (Some(x), Some(y)) => (x, y),
        _ => default_key_lengths(req.eps)?,
    };
    let (k_x, k_y) = (req.k_x.unwrap_or(dk_x), req.k_y.unwrap_or(dk_y));
    let eps = req.eps.value();

    let gamma_max = req.target_frr.powf(1.0 / s_max as f64);
    let delta_max = req.target_far / s_max as f64;
    let frr_budget = gamma_max / 2.0;

    let (r, tau, frr_a, far_a) = (1..=MAX_RESPONSE_LENGTH)
        .find_map(|r| {
            let tau = max_threshold(r, delta_max)?;
            let frr = frr_auth(r, tau, &eps);
            (frr <= frr_budget).then(|| (r, tau, frr, far_auth::<f64>(r, tau)))
        })
        .ok_or_else(|| Error::Infeasible("no (r, tau) meets the single-run budgets".into()))?;

    let (r_tr, p_fb) = (1..=r)
        .map(|r_tr| {
            (
                r_tr,
                planning_false_branch(r_tr, req.eps, beta, req.exponent),
            )
        })
        .find(|&(_, p)| req.d as f64 * p <= frr_a)
        .ok_or_else(|| Error::Infeasible(format!("no r_tr <= {r} balances the traversal")))?;

    let gamma = combined_frr(req.d, &p_fb, &frr_a);
    let s = (1..=s_max)
        .find(|&s| gamma.powi(s as i32) <= req.target_frr)
        .ok_or_else(|| Error::Infeasible(format!("gamma {gamma} needs more than {s_max} runs")))?;
    let rates = iterated_rates(&gamma, &far_a, s);
    if rates.far > req.target_far {
        return Err(Error::Infeasible(format!(
            "{s} runs give FAR {} above {}",
            rates.far, req.target_far
        )));
    }

    let params = ProtocolParams {
        eps: req.eps,
        k_x,
        k_y,
        r: r as usize,
        r_tr: r_tr as usize,
        tau: tau as usize,
        d: req.d,
        beta,
        s,
        checked_noise: false,
    };
    let cost = cost_model_with_factor(&params, rates.expected_cost_factor);
    Ok(PlanResult {
        params,
        p_false_branch: p_fb,
        frr_auth: frr_a,
        far_auth: far_a,
        gamma,
        predicted_frr: rates.frr,
        predicted_far: rates.far,
        cost,
    })
}

/// Largest `tau` with `far_auth(r, tau) <= bound`.
fn max_threshold(r: u32, bound: f64) -> Option<u32> {
    let mut acc = 0.0;
    let mut best = None;
    for tau in 0..=r {
        acc += super::branch::pf_pmf::<f64>(tau, r);
        if acc > bound {
            break;
        }
        best = Some(tau);
    }
    best
}
