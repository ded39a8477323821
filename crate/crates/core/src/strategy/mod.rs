//! Growth strategies S1 and S2, the chunk-of-three baseline, and the
//! machinery to estimate their cost per edge.

mod analytic;
mod growth;
mod monte_carlo;

pub use analytic::{
    analytic_costs, bk_recycled_reference, cost_c3_bk, cost_s1, expected_cost_oracle_s2, s2_cycle, AnalyticCosts,
    S2Cycle, Thresholds, BK_RECYCLED_REFERENCE, THRESHOLDS,
};
pub use growth::{Grower, GrowthState, Strategy};
pub use monte_carlo::{
    compare_strategies, estimate_growth, monte_carlo, run_records, run_s1, run_s2, run_strategy, ComparisonRow,
    CostSummary, GrowthSlope, McConfig, RatioAccumulator, RunLimits, RunRecord, DEFAULT_GIVE_UP_ATTEMPTS,
};
