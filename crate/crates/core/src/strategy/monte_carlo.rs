//! Monte Carlo estimates of cost per edge and long-run growth rate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analytic::{analytic_costs, AnalyticCosts};
use super::growth::{Grower, Strategy};
use crate::eo::{EoError, EoModel, OutcomeSource, DEFAULT_EPR_ATTEMPT_CAP};
use crate::graph::GraphState;

/// A run stops without reaching its target after this many attempts.
pub const DEFAULT_GIVE_UP_ATTEMPTS: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLimits {
    pub give_up_attempts: u64,
    pub epr_attempt_cap: u64,
}

impl Default for RunLimits {
    fn default() -> Self {
        Self { give_up_attempts: DEFAULT_GIVE_UP_ATTEMPTS, epr_attempt_cap: DEFAULT_EPR_ATTEMPT_CAP }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub runs: u64,
    pub target_edges: u64,
    pub seed: u64,
    pub limits: RunLimits,
}

/// Outcome of one growth run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub strategy: Strategy,
    pub seed: u64,
    pub attempts: u64,
    pub net_edges: i64,
    pub cycles: u64,
    pub gave_up: bool,
}

impl RunRecord {
    pub fn cost_per_edge(&self) -> Option<f64> {
        (self.net_edges > 0).then(|| self.attempts as f64 / self.net_edges as f64)
    }
}

/// Exact integer moments of (attempts, edges) pairs. Merging is associative
/// and commutative, so reduction order never changes the result.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RatioAccumulator {
    n: u64,
    sum_a: i128,
    sum_e: i128,
    sum_aa: i128,
    sum_ee: i128,
    sum_ae: i128,
}

impl RatioAccumulator {
    pub fn push(&mut self, attempts: u64, edges: i64) {
        let (a, e) = (attempts as i128, edges as i128);
        self.n += 1;
        self.sum_a += a;
        self.sum_e += e;
        self.sum_aa += a * a;
        self.sum_ee += e * e;
        self.sum_ae += a * e;
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.n += other.n;
        self.sum_a += other.sum_a;
        self.sum_e += other.sum_e;
        self.sum_aa += other.sum_aa;
        self.sum_ee += other.sum_ee;
        self.sum_ae += other.sum_ae;
        self
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn total_attempts(&self) -> u64 {
        self.sum_a as u64
    }

    pub fn total_edges(&self) -> i64 {
        self.sum_e as i64
    }

    /// Ratio-of-sums estimate `sum(a) / sum(e)`.
    pub fn ratio(&self) -> Option<f64> {
        (self.sum_e > 0).then(|| self.sum_a as f64 / self.sum_e as f64)
    }

    /// Delta-method standard error of [`ratio`](Self::ratio).
    pub fn std_error(&self) -> Option<f64> {
        let r = self.ratio()?;
        if self.n < 2 {
            return None;
        }
        let n = self.n as f64;
        let resid = self.sum_aa as f64 - 2.0 * r * self.sum_ae as f64 + r * r * self.sum_ee as f64;
        let mean_e = self.sum_e as f64 / n;
        Some((resid.max(0.0) / (n - 1.0)).sqrt() / (n.sqrt() * mean_e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub strategy: Strategy,
    pub p: f64,
    pub attempts: u64,
    pub net_edges: i64,
    /// Attach attempts summed over runs.
    pub cycles: u64,
    pub cost_per_edge: Option<f64>,
    pub runs: u64,
    pub std_error: Option<f64>,
    /// Some run hit the give-up bound, or no net edges were produced.
    pub non_growing: bool,
}

impl CostSummary {
    fn from_records(strategy: Strategy, p: f64, records: &[RunRecord]) -> Self {
        let acc = records.iter().fold(RatioAccumulator::default(), |mut acc, r| {
            acc.push(r.attempts, r.net_edges);
            acc
        });
        let non_growing = records.iter().any(|r| r.gave_up) || acc.ratio().is_none();
        CostSummary {
            strategy,
            p,
            attempts: acc.total_attempts(),
            net_edges: acc.total_edges(),
            cycles: records.iter().map(|r| r.cycles).sum(),
            cost_per_edge: if non_growing { None } else { acc.ratio() },
            runs: acc.count(),
            std_error: if non_growing { None } else { acc.std_error() },
            non_growing,
        }
    }
}

/// Grows one cluster until it holds `target_edges` edges or the give-up
/// bound is reached.
pub fn run_strategy<S: OutcomeSource + ?Sized>(
    strategy: Strategy,
    source: &mut S,
    target_edges: u64,
    limits: &RunLimits,
) -> Result<(Grower, GraphState), EoError> {
    let mut g = GraphState::new();
    let mut grower = Grower::new(strategy, limits.epr_attempt_cap);
    grower.ensure_seeded(source, &mut g)?;
    while grower.state().edges() < target_edges as i64 && grower.ledger().attempts < limits.give_up_attempts {
        grower.step(source, &mut g)?;
    }
    Ok((grower, g))
}

fn single_run(
    strategy: Strategy,
    model: &mut EoModel,
    seed: u64,
    target_edges: u64,
    limits: &RunLimits,
) -> Result<RunRecord, EoError> {
    let (grower, _) = run_strategy(strategy, model, target_edges, limits)?;
    let net_edges = grower.state().edges();
    Ok(RunRecord {
        strategy,
        seed,
        attempts: grower.ledger().attempts,
        net_edges,
        cycles: grower.attach_attempts(),
        gave_up: net_edges < target_edges as i64,
    })
}

/// One S1 run summarised on its own.
pub fn run_s1(model: &mut EoModel, target_edges: u64, limits: &RunLimits) -> Result<CostSummary, EoError> {
    let record = single_run(Strategy::S1, model, 0, target_edges, limits)?;
    Ok(CostSummary::from_records(Strategy::S1, model.p(), &[record]))
}

/// One S2 run summarised on its own.
pub fn run_s2(model: &mut EoModel, target_edges: u64, limits: &RunLimits) -> Result<CostSummary, EoError> {
    let record = single_run(Strategy::S2, model, 0, target_edges, limits)?;
    Ok(CostSummary::from_records(Strategy::S2, model.p(), &[record]))
}

/// Independent runs, one derived seed each, executed in parallel. Records
/// come back in run order.
pub fn run_records(strategy: Strategy, p: f64, config: &McConfig) -> Result<Vec<RunRecord>, EoError> {
    (0..config.runs)
        .into_par_iter()
        .map(|run| {
            let seed = crate::eo::run_seed(config.seed, run);
            let mut model = EoModel::new(p, seed)?;
            single_run(strategy, &mut model, seed, config.target_edges, &config.limits)
        })
        .collect()
}

pub fn monte_carlo(strategy: Strategy, p: f64, config: &McConfig) -> Result<(CostSummary, Vec<RunRecord>), EoError> {
    let records = run_records(strategy, p, config)?;
    Ok((CostSummary::from_records(strategy, p, &records), records))
}

/// Batch-means estimate of the long-run cluster growth rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthSlope {
    pub strategy: Strategy,
    pub p: f64,
    pub attach_attempts: u64,
    pub attempts: u64,
    pub edge_change: i64,
    /// Mean over batches of edge change per attach attempt.
    pub rate_per_attach: f64,
    pub std_error: f64,
    /// Overall edge change per EO attempt of any kind.
    pub rate_per_attempt: f64,
    pub batches: usize,
}

impl GrowthSlope {
    pub fn z_score(&self) -> f64 {
        if self.std_error > 0.0 {
            self.rate_per_attach / self.std_error
        } else if self.rate_per_attach > 0.0 {
            f64::INFINITY
        } else if self.rate_per_attach < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    }

    /// Growth is significantly positive at `sigmas` standard errors.
    pub fn grows(&self, sigmas: f64) -> bool {
        self.z_score() > sigmas
    }
}

/// Runs a strategy for `attach_budget` attach attempts without a target
/// and estimates the slope of cluster size against attach attempts. The
/// cluster is re-seeded whenever it dies, so a non-growing regime shows a
/// slope indistinguishable from zero.
pub fn estimate_growth(
    strategy: Strategy,
    model: &mut EoModel,
    attach_budget: u64,
    batches: usize,
    limits: &RunLimits,
) -> Result<GrowthSlope, EoError> {
    assert!(batches >= 2, "need at least two batches");
    let mut g = GraphState::new();
    let mut grower = Grower::new(strategy, limits.epr_attempt_cap);
    grower.ensure_seeded(model, &mut g)?;
    let start_edges = grower.state().edges();
    let mut rates = Vec::with_capacity(batches);
    let (mut last_cycles, mut last_edges) = (0u64, start_edges);
    for b in 1..=batches {
        let boundary = attach_budget * b as u64 / batches as u64;
        while grower.attach_attempts() < boundary {
            grower.step(model, &mut g)?;
        }
        let (cycles, edges) = (grower.attach_attempts(), grower.state().edges());
        rates.push((edges - last_edges) as f64 / (cycles - last_cycles).max(1) as f64);
        (last_cycles, last_edges) = (cycles, edges);
    }
    let k = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / k;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let attempts = grower.ledger().attempts;
    let edge_change = grower.state().edges() - start_edges;
    Ok(GrowthSlope {
        strategy,
        p: model.p(),
        attach_attempts: grower.attach_attempts(),
        attempts,
        edge_change,
        rate_per_attach: mean,
        std_error: (var / k).sqrt(),
        rate_per_attempt: edge_change as f64 / attempts as f64,
        batches,
    })
}

/// One row of the strategy comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub analytic: AnalyticCosts,
    pub mc_s1: Option<CostSummary>,
    pub mc_s2: Option<CostSummary>,
}

/// Analytic costs next to Monte Carlo estimates. Monte Carlo is skipped
/// where the analytic cost says the strategy cannot grow.
pub fn compare_strategies(p_grid: &[f64], config: &McConfig) -> Result<Vec<ComparisonRow>, EoError> {
    p_grid
        .iter()
        .map(|&p| {
            EoModel::new(p, config.seed)?;
            let analytic = analytic_costs(p);
            let mc = |strategy, defined: Option<f64>| -> Result<Option<CostSummary>, EoError> {
                match defined {
                    Some(_) => Ok(Some(monte_carlo(strategy, p, config)?.0)),
                    None => Ok(None),
                }
            };
            Ok(ComparisonRow {
                mc_s1: mc(Strategy::S1, analytic.c_s1)?,
                mc_s2: mc(Strategy::S2, analytic.c_s2)?,
                analytic,
            })
        })
        .collect()
}
