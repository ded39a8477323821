//! Step-wise growth of a quasi-linear cluster.
//!
//! The cluster is tracked as a backbone path whose last vertex is the active
//! end. Fused backbone vertices may carry a redundant leaf. When the active
//! end is lost to a failed attachment, the leaf of the new terminal (if any)
//! takes its place, so a single failure does not shorten the backbone.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eo::{attempt_fusion, build_epr, AttemptLedger, EoContext, EoError, OutcomeSource};
use crate::graph::{GraphState, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Attach one EPR pair per cycle.
    S1,
    /// Pre-build a 3-node, attach it, repair it once on failure.
    S2,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::S1 => "s1",
            Strategy::S2 => "s2",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Ok(Strategy::S1),
            "s2" => Ok(Strategy::S2),
            other => Err(format!("unknown strategy `{other}` (expected s1 or s2)")),
        }
    }
}

/// The growing cluster: a backbone path plus the leaves hanging off it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GrowthState {
    backbone: Vec<VertexId>,
    leaf_of: BTreeMap<VertexId, VertexId>,
    edges: i64,
}

impl GrowthState {
    /// Cluster consisting of a single edge `a - b` with `b` as active end.
    pub fn from_edge(a: VertexId, b: VertexId) -> Self {
        Self { backbone: vec![a, b], leaf_of: BTreeMap::new(), edges: 1 }
    }

    pub fn is_empty(&self) -> bool {
        self.backbone.is_empty()
    }

    pub fn anchor(&self) -> Option<VertexId> {
        self.backbone.first().copied()
    }

    pub fn active_end(&self) -> Option<VertexId> {
        self.backbone.last().copied()
    }

    /// Redundant leaf of the vertex behind the active end.
    pub fn spare_leaf(&self) -> Option<VertexId> {
        let n = self.backbone.len();
        (n >= 2).then(|| self.leaf_of.get(&self.backbone[n - 2]).copied()).flatten()
    }

    pub fn backbone(&self) -> &[VertexId] {
        &self.backbone
    }

    pub fn leaf_of(&self) -> &BTreeMap<VertexId, VertexId> {
        &self.leaf_of
    }

    /// Edges in the cluster component.
    pub fn edges(&self) -> i64 {
        self.edges
    }

    pub fn into_parts(self) -> (Vec<VertexId>, BTreeMap<VertexId, VertexId>) {
        (self.backbone, self.leaf_of)
    }
}

/// Fragment offered for attachment: `port` is the degree-1 vertex that will
/// be fused with the active end.
struct Fragment {
    port: VertexId,
    edges: i64,
}

/// Drives one cluster through S1 or S2 cycles.
#[derive(Clone, Debug)]
pub struct Grower {
    strategy: Strategy,
    state: GrowthState,
    ledger: AttemptLedger,
    attach_attempts: u64,
    attach_deltas: BTreeMap<i64, u64>,
    reseeds: u64,
    epr_attempt_cap: u64,
}

impl Grower {
    pub fn new(strategy: Strategy, epr_attempt_cap: u64) -> Self {
        Self {
            strategy,
            state: GrowthState::default(),
            ledger: AttemptLedger::default(),
            attach_attempts: 0,
            attach_deltas: BTreeMap::new(),
            reseeds: 0,
            epr_attempt_cap,
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn state(&self) -> &GrowthState {
        &self.state
    }

    pub fn into_state(self) -> GrowthState {
        self.state
    }

    pub fn ledger(&self) -> &AttemptLedger {
        &self.ledger
    }

    /// EOs that touched the cluster.
    pub fn attach_attempts(&self) -> u64 {
        self.attach_attempts
    }

    /// Histogram of the cluster edge change of each attach attempt.
    pub fn attach_deltas(&self) -> &BTreeMap<i64, u64> {
        &self.attach_deltas
    }

    /// Times the cluster had to be re-seeded from a fresh EPR pair,
    /// including the initial seeding.
    pub fn reseeds(&self) -> u64 {
        self.reseeds
    }

    /// Seeds the cluster with one EPR pair if it is empty.
    pub fn ensure_seeded<S: OutcomeSource + ?Sized>(
        &mut self,
        source: &mut S,
        g: &mut GraphState,
    ) -> Result<(), EoError> {
        if self.state.is_empty() {
            let (a, b) = build_epr(source, &mut self.ledger, g, self.epr_attempt_cap)?;
            self.state = GrowthState::from_edge(a, b);
            self.reseeds += 1;
        }
        Ok(())
    }

    /// One cycle: seeding if the cluster is empty, otherwise one EPR
    /// attachment (S1) or one full 3-node lifecycle (S2).
    pub fn step<S: OutcomeSource + ?Sized>(&mut self, source: &mut S, g: &mut GraphState) -> Result<(), EoError> {
        if self.state.is_empty() {
            return self.ensure_seeded(source, g);
        }
        match self.strategy {
            Strategy::S1 => self.step_s1(source, g),
            Strategy::S2 => self.step_s2(source, g),
        }
    }

    fn step_s1<S: OutcomeSource + ?Sized>(&mut self, source: &mut S, g: &mut GraphState) -> Result<(), EoError> {
        let (far, port) = build_epr(source, &mut self.ledger, g, self.epr_attempt_cap)?;
        if self.attach(source, g, Fragment { port, edges: 1 })? {
            self.state.backbone.push(far);
        } else {
            g.remove_vertex(far)?;
        }
        Ok(())
    }

    fn step_s2<S: OutcomeSource + ?Sized>(&mut self, source: &mut S, g: &mut GraphState) -> Result<(), EoError> {
        let mut center = self.build_three_node(source, g)?;
        loop {
            let arms: Vec<VertexId> = g.neighbors(center)?.iter().copied().collect();
            debug_assert_eq!(arms.len(), 3);
            if self.attach(source, g, Fragment { port: arms[0], edges: 3 })? {
                self.state.backbone.push(center);
                self.state.leaf_of.insert(center, arms[2]);
                self.state.backbone.push(arms[1]);
                return Ok(());
            }
            if self.state.is_empty() {
                // nothing left to attach to; the remnant chain is discarded
                for v in [center, arms[1], arms[2]] {
                    g.remove_vertex(v)?;
                }
                return Ok(());
            }
            let extra = g.add_vertex();
            let report = attempt_fusion(source, &mut self.ledger, g, center, extra, EoContext::Repair)?;
            if report.succeeded() {
                center = report.fused_vertex;
            } else {
                g.remove_vertex(arms[1])?;
                g.remove_vertex(arms[2])?;
                return Ok(());
            }
        }
    }

    /// Fuses two EPR pairs end-to-end until it succeeds; returns the star's
    /// center. A failed fusion discards both pairs.
    fn build_three_node<S: OutcomeSource + ?Sized>(
        &mut self,
        source: &mut S,
        g: &mut GraphState,
    ) -> Result<VertexId, EoError> {
        loop {
            let (a, a_end) = build_epr(source, &mut self.ledger, g, self.epr_attempt_cap)?;
            let (b, b_end) = build_epr(source, &mut self.ledger, g, self.epr_attempt_cap)?;
            let report = attempt_fusion(source, &mut self.ledger, g, a_end, b, EoContext::ThreeNodeBuild)?;
            if report.succeeded() {
                return Ok(report.fused_vertex);
            }
            g.remove_vertex(a)?;
            g.remove_vertex(b_end)?;
        }
    }

    /// Fuses the active end with the fragment's port and updates the
    /// backbone. Returns whether the fusion succeeded; on failure the
    /// fragment is left for the caller to clean up.
    fn attach<S: OutcomeSource + ?Sized>(
        &mut self,
        source: &mut S,
        g: &mut GraphState,
        fragment: Fragment,
    ) -> Result<bool, EoError> {
        let tip = self.state.active_end().expect("attach on empty cluster");
        let tip_degree = g.degree(tip)? as i64;
        let report = attempt_fusion(source, &mut self.ledger, g, tip, fragment.port, EoContext::Attach)?;
        self.attach_attempts += 1;
        self.state.backbone.pop();
        let delta = match report.leaf_vertex {
            Some(leaf) => {
                let fused = report.fused_vertex;
                self.state.backbone.push(fused);
                self.state.leaf_of.insert(fused, leaf);
                report.edge_delta + fragment.edges
            }
            None => {
                if let Some(&terminal) = self.state.backbone.last() {
                    if let Some(leaf) = self.state.leaf_of.remove(&terminal) {
                        self.state.backbone.push(leaf);
                    }
                }
                -tip_degree
            }
        };
        self.state.edges += delta;
        *self.attach_deltas.entry(delta).or_default() += 1;
        Ok(report.succeeded())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eo::{EoModel, Outcome, ScriptedOutcomes, DEFAULT_EPR_ATTEMPT_CAP};

    fn assert_consistent(g: &GraphState, state: &GrowthState) {
        let Some(anchor) = state.anchor() else { return };
        assert_eq!(g.component_edges(anchor).unwrap() as i64, state.edges());
        for w in state.backbone().windows(2) {
            assert!(g.has_edge(w[0], w[1]), "backbone broken at {:?}", w);
        }
        for (&b, &l) in state.leaf_of() {
            assert!(g.has_edge(b, l));
            assert_eq!(g.degree(l).unwrap(), 1);
        }
        if state.backbone().len() > 1 {
            assert_eq!(g.degree(state.active_end().unwrap()).unwrap(), 1);
        }
    }

    #[test]
    fn s1_single_failure_keeps_backbone_length() {
        let mut g = GraphState::new();
        let mut src = ScriptedOutcomes::new(EoContext::Attach, [Outcome::Success, Outcome::Failure, Outcome::Failure]);
        let mut gr = Grower::new(Strategy::S1, DEFAULT_EPR_ATTEMPT_CAP);
        gr.ensure_seeded(&mut src, &mut g).unwrap();
        gr.step(&mut src, &mut g).unwrap();
        let after_success = gr.state().backbone().len();
        assert_eq!(after_success, 3);
        assert!(gr.state().spare_leaf().is_some());
        assert_eq!(gr.state().edges(), 3);

        gr.step(&mut src, &mut g).unwrap();
        assert_eq!(gr.state().backbone().len(), after_success);
        assert_eq!(gr.state().spare_leaf(), None);
        assert_eq!(gr.state().edges(), 2);
        assert_consistent(&g, gr.state());

        gr.step(&mut src, &mut g).unwrap();
        assert_eq!(gr.state().backbone().len(), after_success - 1);
        assert_eq!(gr.state().edges(), 1);
        assert_consistent(&g, gr.state());
        assert_eq!(gr.attach_deltas(), &BTreeMap::from([(-1, 2), (2, 1)]));
    }

    #[test]
    fn s2_attach_success_adds_four_edges() {
        let mut g = GraphState::new();
        let mut src = ScriptedOutcomes::new(EoContext::Attach, [Outcome::Success]);
        let mut gr = Grower::new(Strategy::S2, DEFAULT_EPR_ATTEMPT_CAP);
        gr.ensure_seeded(&mut src, &mut g).unwrap();
        gr.step(&mut src, &mut g).unwrap();
        assert_eq!(gr.state().edges(), 5);
        // seed, two builds, one 3-node fusion, one attach
        assert_eq!(gr.ledger().attempts, 5);
        assert_consistent(&g, gr.state());
        assert_eq!(g.vertex_count() as i64, gr.state().edges() + 1);
    }

    #[test]
    fn s2_failed_attach_is_repaired_and_retried() {
        let mut g = GraphState::new();
        let mut src = ScriptedOutcomes::new(EoContext::Attach, [Outcome::Success, Outcome::Failure, Outcome::Success]);
        let mut gr = Grower::new(Strategy::S2, DEFAULT_EPR_ATTEMPT_CAP);
        gr.ensure_seeded(&mut src, &mut g).unwrap();
        gr.step(&mut src, &mut g).unwrap();
        let before = gr.ledger().attempts;
        gr.step(&mut src, &mut g).unwrap();
        // build (2 EPR + 1), attach fail, repair, attach success
        assert_eq!(gr.ledger().attempts - before, 6);
        assert_eq!(gr.state().edges(), 5 - 1 + 4);
        assert_consistent(&g, gr.state());
        // every vertex belongs to the cluster once the lifecycle ends
        assert_eq!(g.components().len(), 1);
    }

    #[test]
    fn random_growth_keeps_invariants() {
        for strategy in [Strategy::S1, Strategy::S2] {
            let mut g = GraphState::new();
            let mut m = EoModel::new(0.4, 99).unwrap();
            let mut gr = Grower::new(strategy, DEFAULT_EPR_ATTEMPT_CAP);
            for _ in 0..2_000 {
                gr.step(&mut m, &mut g).unwrap();
                assert_consistent(&g, gr.state());
                if let Some(a) = gr.state().anchor() {
                    assert_eq!(g.component(a).unwrap().len(), g.vertex_count());
                }
            }
            assert!(gr.state().edges() > 50);
        }
    }

    #[test]
    fn cluster_can_die_and_reseed() {
        let mut g = GraphState::new();
        let mut src = ScriptedOutcomes::new(EoContext::Attach, []);
        let mut gr = Grower::new(Strategy::S1, DEFAULT_EPR_ATTEMPT_CAP);
        gr.ensure_seeded(&mut src, &mut g).unwrap();
        gr.step(&mut src, &mut g).unwrap();
        gr.step(&mut src, &mut g).unwrap();
        assert!(gr.state().is_empty());
        assert_eq!(g.vertex_count(), 0);
        gr.step(&mut src, &mut g).unwrap();
        assert_eq!(gr.state().edges(), 1);
        assert_eq!(gr.reseeds(), 2);
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("S2".parse::<Strategy>(), Ok(Strategy::S2));
        assert!("s3".parse::<Strategy>().is_err());
        assert_eq!(Strategy::S1.to_string(), "s1");
    }
}
