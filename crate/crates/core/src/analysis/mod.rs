//! Closed-form error rates, costs and parameter planning.

mod auth;
mod branch;
mod cost;
mod plan;
mod prob;

pub use auth::{combined_frr, far_auth, frr_auth, iterated_rates, IteratedRates};
pub use branch::{
    false_branch_binary, false_branch_general, false_branch_normal_approx, false_branch_tie_aware,
    false_branch_with_exponent, pf_pmf, pf_table, pt_pmf, pt_table, BranchModel, ErfcConvention,
    GaussianMoments, SiblingExponent,
};
pub use cost::{
    cost_model, cost_model_with_factor, min_response_length, planning_false_branch,
    response_length_curve, single_run_frr, CostReport, CurvePoint, MAX_RESPONSE_LENGTH,
};
pub use plan::{branching_factor, default_key_lengths, plan_parameters, PlanRequest, PlanResult};
pub use prob::Probability;
