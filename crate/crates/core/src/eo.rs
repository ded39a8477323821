//! Probabilistic model of a single entangling operation (EO).

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{FusionReport, GraphError, GraphState, VertexId};

/// Default number of attempts one EPR build may spend before giving up.
pub const DEFAULT_EPR_ATTEMPT_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Failure,
}

/// What an attempt is being used for. Scripted sources key off this.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EoContext {
    EprBuild,
    ThreeNodeBuild,
    Attach,
    Repair,
    Junction,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EoError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("success probability {0} outside (0, 1]")]
    InvalidProbability(f64),
    #[error("EPR build gave up after {0} attempts")]
    AttemptCapExceeded(u64),
}

/// Anything that can decide the outcome of an EO.
pub trait OutcomeSource {
    fn draw(&mut self, ctx: EoContext) -> Outcome;
}

/// Success probability `p` plus a seeded ChaCha stream.
#[derive(Clone, Debug)]
pub struct EoModel {
    p: f64,
    rng: ChaCha8Rng,
}

impl EoModel {
    pub fn new(p: f64, seed: u64) -> Result<Self, EoError> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(EoError::InvalidProbability(p));
        }
        Ok(Self { p, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    /// Model for run `run` of an experiment seeded with `seed`.
    pub fn for_run(p: f64, seed: u64, run: u64) -> Result<Self, EoError> {
        Self::new(p, run_seed(seed, run))
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// The ideal optical scheme cannot exceed one half.
    pub fn is_physical(&self) -> bool {
        self.p <= 0.5
    }
}

impl OutcomeSource for EoModel {
    fn draw(&mut self, _ctx: EoContext) -> Outcome {
        if self.rng.gen::<f64>() < self.p {
            Outcome::Success
        } else {
            Outcome::Failure
        }
    }
}

/// Derives the seed of an independent run with splitmix64 finalisation.
pub fn run_seed(seed: u64, run: u64) -> u64 {
    let mut z = seed ^ run.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Replays a fixed script for one context and succeeds everywhere else.
/// Once the script runs out, the scripted context fails.
#[derive(Clone, Debug)]
pub struct ScriptedOutcomes {
    context: EoContext,
    script: VecDeque<Outcome>,
}

impl ScriptedOutcomes {
    pub fn new(context: EoContext, script: impl IntoIterator<Item = Outcome>) -> Self {
        Self { context, script: script.into_iter().collect() }
    }

    pub fn remaining(&self) -> usize {
        self.script.len()
    }
}

impl OutcomeSource for ScriptedOutcomes {
    fn draw(&mut self, ctx: EoContext) -> Outcome {
        if ctx == self.context {
            self.script.pop_front().unwrap_or(Outcome::Failure)
        } else {
            Outcome::Success
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptLedger {
    pub attempts: u64,
    pub successes: u64,
    pub failures: u64,
    /// Completed EPR build loops.
    pub epr_builds: u64,
}

impl AttemptLedger {
    pub fn record(&mut self, outcome: Outcome) {
        self.attempts += 1;
        match outcome {
            Outcome::Success => self.successes += 1,
            Outcome::Failure => self.failures += 1,
        }
    }

    pub fn merge(&mut self, other: &AttemptLedger) {
        self.attempts += other.attempts;
        self.successes += other.successes;
        self.failures += other.failures;
        self.epr_builds += other.epr_builds;
    }
}

/// One EO on `u`, `v`. Preconditions are checked before any randomness is
/// consumed, so a rejected call leaves the source and ledger untouched.
pub fn attempt_fusion<S: OutcomeSource + ?Sized>(
    source: &mut S,
    ledger: &mut AttemptLedger,
    g: &mut GraphState,
    u: VertexId,
    v: VertexId,
    ctx: EoContext,
) -> Result<FusionReport, GraphError> {
    g.check_fusable(u, v)?;
    let outcome = source.draw(ctx);
    forced_outcome_fusion(g, ledger, u, v, outcome)
}

pub fn forced_outcome_fusion(
    g: &mut GraphState,
    ledger: &mut AttemptLedger,
    u: VertexId,
    v: VertexId,
    outcome: Outcome,
) -> Result<FusionReport, GraphError> {
    let report = match outcome {
        Outcome::Success => g.fuse_success(u, v)?,
        Outcome::Failure => g.fuse_failure(u, v)?,
    };
    ledger.record(outcome);
    Ok(report)
}

/// Fuses fresh isolated pairs until one succeeds. Returns `(fused, leaf)`,
/// the two ends of an EPR-equivalent edge.
pub fn build_epr<S: OutcomeSource + ?Sized>(
    source: &mut S,
    ledger: &mut AttemptLedger,
    g: &mut GraphState,
    cap: u64,
) -> Result<(VertexId, VertexId), EoError> {
    for _ in 0..cap {
        let a = g.add_vertex();
        let b = g.add_vertex();
        let report = attempt_fusion(source, ledger, g, a, b, EoContext::EprBuild)?;
        if let Some(leaf) = report.leaf_vertex {
            ledger.epr_builds += 1;
            return Ok((report.fused_vertex, leaf));
        }
    }
    Err(EoError::AttemptCapExceeded(cap))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_probability() {
        assert!(EoModel::new(0.0, 1).is_err());
        assert!(EoModel::new(1.5, 1).is_err());
        assert!(EoModel::new(f64::NAN, 1).is_err());
        assert!(EoModel::new(1.0, 1).is_ok());
        assert!(!EoModel::new(0.6, 1).unwrap().is_physical());
    }

    #[test]
    fn certain_success_always_makes_an_edge() {
        let mut m = EoModel::new(1.0, 7).unwrap();
        let mut ledger = AttemptLedger::default();
        for _ in 0..100 {
            let mut g = GraphState::with_vertices(2);
            let r = attempt_fusion(&mut m, &mut ledger, &mut g, VertexId(0), VertexId(1), EoContext::Attach).unwrap();
            assert!(r.succeeded());
            assert_eq!(g.edge_count(), 1);
        }
        assert_eq!(ledger.successes, 100);
    }

    #[test]
    fn tiny_probability_never_succeeds_in_practice() {
        let mut m = EoModel::new(1e-9, 11).unwrap();
        let mut ledger = AttemptLedger::default();
        let mut g = GraphState::new();
        for _ in 0..10_000 {
            let a = g.add_vertex();
            let b = g.add_vertex();
            attempt_fusion(&mut m, &mut ledger, &mut g, a, b, EoContext::Attach).unwrap();
        }
        assert_eq!(ledger.successes, 0);
        assert_eq!(ledger.attempts, 10_000);
    }

    #[test]
    fn graph_errors_consume_nothing() {
        let mut m = EoModel::new(0.5, 3).unwrap();
        let mut replay = m.clone();
        let mut ledger = AttemptLedger::default();
        let mut g = GraphState::with_vertices(2);
        g.add_edge(VertexId(0), VertexId(1)).unwrap();
        let err = attempt_fusion(&mut m, &mut ledger, &mut g, VertexId(0), VertexId(1), EoContext::Attach);
        assert!(matches!(err, Err(GraphError::AdjacentFusion(..))));
        assert_eq!(ledger, AttemptLedger::default());
        for _ in 0..32 {
            assert_eq!(m.draw(EoContext::Attach), replay.draw(EoContext::Attach));
        }
    }

    #[test]
    fn build_epr_with_certain_success_takes_one_attempt() {
        let mut m = EoModel::new(1.0, 0).unwrap();
        let mut ledger = AttemptLedger::default();
        let mut g = GraphState::new();
        let (a, b) = build_epr(&mut m, &mut ledger, &mut g, DEFAULT_EPR_ATTEMPT_CAP).unwrap();
        assert!(g.has_edge(a, b));
        assert_eq!((ledger.attempts, ledger.epr_builds), (1, 1));
    }

    #[test]
    fn build_epr_gives_up_at_cap() {
        let mut m = EoModel::new(1e-12, 0).unwrap();
        let mut ledger = AttemptLedger::default();
        let mut g = GraphState::new();
        assert_eq!(build_epr(&mut m, &mut ledger, &mut g, 50), Err(EoError::AttemptCapExceeded(50)));
        assert_eq!(ledger.attempts, 50);
        assert_eq!(g.vertex_count(), 0);
    }

    #[test]
    fn forced_outcomes() {
        let mut ledger = AttemptLedger::default();
        let mut g = GraphState::with_vertices(4);
        let r = forced_outcome_fusion(&mut g, &mut ledger, VertexId(0), VertexId(1), Outcome::Success).unwrap();
        assert!(g.has_edge(r.fused_vertex, r.leaf_vertex.unwrap()));
        forced_outcome_fusion(&mut g, &mut ledger, VertexId(2), VertexId(3), Outcome::Failure).unwrap();
        assert!(!g.contains(VertexId(2)) && !g.contains(VertexId(3)));
        assert_eq!((ledger.attempts, ledger.successes, ledger.failures), (2, 1, 1));
    }

    #[test]
    fn scripted_source_only_scripts_its_context() {
        let mut s = ScriptedOutcomes::new(EoContext::Attach, [Outcome::Success, Outcome::Failure]);
        assert_eq!(s.draw(EoContext::EprBuild), Outcome::Success);
        assert_eq!(s.draw(EoContext::Attach), Outcome::Success);
        assert_eq!(s.draw(EoContext::Attach), Outcome::Failure);
        assert_eq!(s.remaining(), 0);
    }

    #[test]
    fn run_seeds_differ() {
        let seeds: std::collections::BTreeSet<_> = (0..1000).map(|r| run_seed(42, r)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(run_seed(42, 5), run_seed(42, 5));
    }
}
