use serde::{Deserialize, Serialize};

use super::auth::{combined_frr, frr_auth, iterated_rates};
use super::branch::{false_branch_binary, false_branch_general, SiblingExponent};
use crate::error::{Error, Result};
use crate::gf2::NoiseRate;
use crate::hb::ProtocolParams;

/// Expected costs of the iterated protocol, in bit operations and bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub reader_bitops: f64,
    pub tag_bitops: f64,
    pub comm_bits: f64,
    pub tag_mem_bits: u64,
    pub expected_repeat_factor: f64,
}

/// Per-level wrong-branch probability used for planning. A binary tree uses
/// the two-child formula; wider trees use the general one.
pub fn planning_false_branch(
    r_tr: u32,
    eps: NoiseRate,
    beta: u64,
    exponent: SiblingExponent,
) -> f64 {
    if beta == 2 {
        false_branch_binary(r_tr, &eps.value())
    } else {
        false_branch_general(r_tr, &eps.value(), beta, exponent)
    }
}

/// Single-run FRR `d * P_fb(r_tr) + FRR_auth(r, tau)`.
pub fn single_run_frr(p: &ProtocolParams, exponent: SiblingExponent) -> f64 {
    let p_fb = if p.d == 0 {
        0.0
    } else {
        planning_false_branch(p.r_tr as u32, p.eps, p.beta, exponent)
    };
    combined_frr(
        p.d,
        &p_fb,
        &frr_auth(p.r as u32, p.tau as u32, &p.eps.value()),
    )
}

/// Costs scaled by the expected number of runs for the params' own FRR and `s`.
pub fn cost_model(p: &ProtocolParams) -> CostReport {
    let gamma = single_run_frr(p, SiblingExponent::Beta);
    let factor = iterated_rates(&gamma, &0.0, p.s).expected_cost_factor;
    cost_model_with_factor(p, factor)
}

/// Single-run costs times `factor`. `d = 0` reduces to plain HB+.
pub fn cost_model_with_factor(p: &ProtocolParams, factor: f64) -> CostReport {
    let (k_x, k_y, r, r_tr) = (p.k_x as f64, p.k_y as f64, p.r as f64, p.r_tr as f64);
    let (d, beta) = (p.d as f64, p.beta as f64);
    let auth = (k_x + k_y) * r;
    CostReport {
        reader_bitops: factor * (beta * d * k_y * r_tr + auth),
        tag_bitops: factor * (d * k_y * r_tr + auth),
        comm_bits: factor * (r * (k_x + k_y) + r_tr * d),
        tag_mem_bits: (p.k_x + (p.d as usize + 1) * p.k_y) as u64,
        expected_repeat_factor: factor,
    }
}

/// Largest response length searched.
pub const MAX_RESPONSE_LENGTH: u32 = 4096;

/// Smallest `r` whose wrong-branch probability is at most `target`.
pub fn min_response_length(
    beta: u64,
    target: f64,
    eps: NoiseRate,
    exponent: SiblingExponent,
) -> Result<u32> {
    min_response_length_from(beta, target, eps, exponent, 1)
}

fn min_response_length_from(
    beta: u64,
    target: f64,
    eps: NoiseRate,
    exponent: SiblingExponent,
    start: u32,
) -> Result<u32> {
    if target.is_nan() || target <= 0.0 {
        return Err(Error::Infeasible(format!(
            "target {target} must be positive"
        )));
    }
    (start.max(1)..=MAX_RESPONSE_LENGTH)
        .find(|&r| false_branch_general(r, &eps.value(), beta, exponent) <= target)
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "no r <= {MAX_RESPONSE_LENGTH} reaches {target} at beta {beta}"
            ))
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub target: f64,
    pub beta: u64,
    pub r: u32,
}

/// Minimal `r` for every `beta` in `2..=beta_max` and each target. The search
/// for `beta + 1` starts at the answer for `beta`, since the probability
/// grows with `beta`.
pub fn response_length_curve(
    targets: &[f64],
    beta_max: u64,
    eps: NoiseRate,
    exponent: SiblingExponent,
) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::new();
    for &target in targets {
        let mut r = 1;
        for beta in 2..=beta_max {
            r = min_response_length_from(beta, target, eps, exponent, r)?;
            out.push(CurvePoint { target, beta, r });
        }
    }
    Ok(out)
}
