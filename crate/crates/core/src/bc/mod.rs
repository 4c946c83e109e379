//! Borel-Cantelli counting bounds with exact oracles, Gaussian first-passage
//! bounds, the `(delta, u, k, N)` passage planner and its Monte Carlo
//! validator, and a diagnostic checker for the stopping-time sequence
//! criterion.

mod bounds;
mod criterion;
mod passage;
mod plan;

pub use bounds::{
    at_least, bc_lower, bc_upper, count_distribution, exact_at_least, EventProfile, ExactMethod,
    ENUMERATION_LIMIT, RECURSION_LIMIT,
};
pub use criterion::{
    check_criterion, CompletenessCriterion, CriterionReport, Direction, Trend, Verdict,
    TREND_THRESHOLD,
};
pub use passage::{p0, passage_mc, q0, PassageEstimate};
pub use plan::{
    feasible_deltas, plan_corollary, plan_product, validate_corollary, CorollaryValidation,
    PassagePlan, PlanGrid, RateMode, ValidateOptions,
};
