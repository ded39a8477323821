//! Cross-linking independently grown chains through their leaves.
//!
//! Chains grown by S1 or S2 carry many redundant degree-1 leaves. Fusing a
//! leaf of one chain with a leaf of another creates a "T" junction: a vertex
//! bonded to both backbones plus one new leaf. No EPR pairs are consumed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eo::{attempt_fusion, AttemptLedger, EoContext, EoError, EoModel, OutcomeSource};
use crate::graph::{GraphError, GraphState, VertexId};
use crate::strategy::{Grower, GrowthState, RunLimits, Strategy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error(transparent)]
    Eo(#[from] EoError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("need at least {min} {what}, got {got}")]
    TooSmall { what: &'static str, min: usize, got: usize },
}

/// A grown quasi-linear chain: backbone path plus leaves keyed by the
/// backbone vertex they hang from.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSection {
    pub backbone: Vec<VertexId>,
    pub leaf_of: BTreeMap<VertexId, VertexId>,
}

impl From<GrowthState> for ChainSection {
    fn from(state: GrowthState) -> Self {
        let (backbone, leaf_of) = state.into_parts();
        Self { backbone, leaf_of }
    }
}

impl ChainSection {
    /// Leaves in backbone order.
    pub fn leaves(&self) -> Vec<VertexId> {
        self.backbone.iter().filter_map(|b| self.leaf_of.get(b).copied()).collect()
    }

    /// Backbone forms a path and every mapped leaf is a degree-1 vertex
    /// hanging off its backbone vertex.
    pub fn is_consistent(&self, g: &GraphState) -> bool {
        self.backbone.windows(2).all(|w| g.has_edge(w[0], w[1]))
            && self
                .leaf_of
                .iter()
                .all(|(&b, &l)| g.has_edge(b, l) && g.degree(l) == Ok(1) && self.backbone.contains(&b))
    }

    fn take_leaf(&mut self, leaf: VertexId) {
        self.leaf_of.retain(|_, l| *l != leaf);
    }
}

/// Which rows get cross-linked.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowPairing {
    /// Row `i` with row `i + 1`.
    #[default]
    Grid,
    /// As `Grid`, plus the last row with the first.
    Ring,
    AllPairs,
}

impl RowPairing {
    pub fn pairs(self, rows: usize) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = match self {
            RowPairing::Grid | RowPairing::Ring => (1..rows).map(|i| (i - 1, i)).collect(),
            RowPairing::AllPairs => (0..rows).flat_map(|i| (i + 1..rows).map(move |j| (i, j))).collect(),
        };
        if self == RowPairing::Ring && rows > 2 {
            out.push((rows - 1, 0));
        }
        out
    }
}

impl fmt::Display for RowPairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowPairing::Grid => "grid",
            RowPairing::Ring => "ring",
            RowPairing::AllPairs => "all-pairs",
        })
    }
}

impl FromStr for RowPairing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grid" => Ok(RowPairing::Grid),
            "ring" => Ok(RowPairing::Ring),
            "all-pairs" => Ok(RowPairing::AllPairs),
            other => Err(format!("unknown pairing `{other}` (expected grid, ring or all-pairs)")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    pub pairing: RowPairing,
    /// Try to fuse the leaves of neighbouring junctions as well.
    pub second_gen: bool,
}

/// A formed junction between two rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Junction {
    pub rows: (usize, usize),
    pub center: VertexId,
    pub leaf: VertexId,
}

/// Junction attempts between one pair of rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairTally {
    pub rows: (usize, usize),
    pub attempted: u64,
    pub formed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AssemblyStats {
    pub junctions_attempted: u64,
    pub junctions_formed: u64,
    /// Leaves created by formed junctions.
    pub second_gen_leaves: u64,
    pub second_gen_attempted: u64,
    pub second_gen_formed: u64,
    pub phase1_attempts: u64,
    pub phase2_attempts: u64,
    pub final_edges: u64,
    /// `(phase1 + phase2) / final_edges`, with edges counted in the largest
    /// component.
    pub total_cost_per_edge: Option<f64>,
    pub per_pair: Vec<PairTally>,
    pub junctions: Vec<Junction>,
}

/// Sections grown in one shared graph.
#[derive(Clone, Debug)]
pub struct GrownSections {
    pub graph: GraphState,
    pub sections: Vec<ChainSection>,
    pub ledger: AttemptLedger,
    /// Some section hit the give-up bound before reaching its length.
    pub non_growing: bool,
}

impl GrownSections {
    pub fn edges(&self) -> usize {
        self.graph.edge_count()
    }
}

/// Grows `count` disjoint chains, each until its backbone has at least
/// `backbone_len` vertices.
pub fn grow_sections(
    model: &mut EoModel,
    strategy: Strategy,
    count: usize,
    backbone_len: usize,
    limits: &RunLimits,
) -> Result<GrownSections, AssemblyError> {
    if count < 2 {
        return Err(AssemblyError::TooSmall { what: "sections", min: 2, got: count });
    }
    if backbone_len < 2 {
        return Err(AssemblyError::TooSmall { what: "backbone vertices", min: 2, got: backbone_len });
    }
    let mut graph = GraphState::new();
    let mut ledger = AttemptLedger::default();
    let mut sections = Vec::with_capacity(count);
    let mut non_growing = false;
    for _ in 0..count {
        let mut grower = Grower::new(strategy, limits.epr_attempt_cap);
        grower.ensure_seeded(model, &mut graph)?;
        while grower.state().backbone().len() < backbone_len {
            if grower.ledger().attempts >= limits.give_up_attempts {
                non_growing = true;
                break;
            }
            grower.step(model, &mut graph)?;
        }
        ledger.merge(grower.ledger());
        sections.push(ChainSection::from(grower.into_state()));
    }
    Ok(GrownSections { graph, sections, ledger, non_growing })
}

/// Splits each row's leaves round-robin over the row pairs it takes part
/// in. Returns, per pair, the facing leaves of both rows in backbone order.
fn allocate_leaves(rows: &[ChainSection], pairs: &[(usize, usize)]) -> Vec<(Vec<VertexId>, Vec<VertexId>)> {
    let mut partners: Vec<Vec<usize>> = vec![Vec::new(); rows.len()];
    for (k, &(i, j)) in pairs.iter().enumerate() {
        partners[i].push(k);
        partners[j].push(k);
    }
    let mut out = vec![(Vec::new(), Vec::new()); pairs.len()];
    for (r, row) in rows.iter().enumerate() {
        let slots = &partners[r];
        if slots.is_empty() {
            continue;
        }
        for (n, leaf) in row.leaves().into_iter().enumerate() {
            let k = slots[n % slots.len()];
            if pairs[k].0 == r {
                out[k].0.push(leaf);
            } else {
                out[k].1.push(leaf);
            }
        }
    }
    out
}

/// Fuses facing leaves of paired rows. Each pair of rows zips its facing
/// leaves in backbone order; surplus leaves are left in place. A failed
/// junction deletes both leaves and leaves the backbones intact.
pub fn assemble<S: OutcomeSource + ?Sized>(
    source: &mut S,
    g: &mut GraphState,
    rows: &mut [ChainSection],
    ledger: &mut AttemptLedger,
    options: &AssemblyOptions,
) -> Result<AssemblyStats, AssemblyError> {
    let phase1_attempts = ledger.attempts;
    let pairs = options.pairing.pairs(rows.len());
    let allocation = allocate_leaves(rows, &pairs);
    let mut stats = AssemblyStats { phase1_attempts, ..AssemblyStats::default() };
    let mut per_pair: Vec<Vec<Junction>> = vec![Vec::new(); pairs.len()];

    for (k, (&(i, j), (left, right))) in pairs.iter().zip(&allocation).enumerate() {
        let mut tally = PairTally { rows: (i, j), attempted: 0, formed: 0 };
        for (&a, &b) in left.iter().zip(right) {
            let report = attempt_fusion(source, ledger, g, a, b, EoContext::Junction)?;
            stats.junctions_attempted += 1;
            tally.attempted += 1;
            rows[i].take_leaf(a);
            rows[j].take_leaf(b);
            if let Some(leaf) = report.leaf_vertex {
                stats.junctions_formed += 1;
                stats.second_gen_leaves += 1;
                tally.formed += 1;
                per_pair[k].push(Junction { rows: (i, j), center: report.fused_vertex, leaf });
            }
        }
        stats.per_pair.push(tally);
    }

    if options.second_gen {
        for junctions in &per_pair {
            for w in junctions.chunks_exact(2) {
                let report = attempt_fusion(source, ledger, g, w[0].leaf, w[1].leaf, EoContext::Junction)?;
                stats.second_gen_attempted += 1;
                if report.succeeded() {
                    stats.second_gen_formed += 1;
                }
            }
        }
    }

    stats.junctions = per_pair.into_iter().flatten().collect();
    stats.phase2_attempts = ledger.attempts - phase1_attempts;
    stats.final_edges = largest_component(g).map_or(0, |c| component_edge_count(g, &c)) as u64;
    stats.total_cost_per_edge =
        (stats.final_edges > 0).then(|| (phase1_attempts + stats.phase2_attempts) as f64 / stats.final_edges as f64);
    Ok(stats)
}

fn component_edge_count(g: &GraphState, comp: &BTreeSet<VertexId>) -> usize {
    comp.iter().map(|&v| g.degree(v).unwrap()).sum::<usize>() / 2
}

/// Component with the most edges; ties go to the one with the smallest id.
fn largest_component(g: &GraphState) -> Option<BTreeSet<VertexId>> {
    let mut best: Option<(usize, BTreeSet<VertexId>)> = None;
    for comp in g.components() {
        let e = component_edge_count(g, &comp);
        if best.as_ref().is_none_or(|(be, _)| e > *be) {
            best = Some((e, comp));
        }
    }
    best.map(|(_, c)| c)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossLinks {
    pub rows: (usize, usize),
    pub links: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub components: usize,
    pub largest_component_vertices: usize,
    pub largest_component_edges: usize,
    /// Rows whose backbone lies in the largest component.
    pub rows_in_largest: usize,
    /// Vertices bonded to the backbones of two rows, per row pair.
    pub cross_links: Vec<CrossLinks>,
    /// Components containing no backbone vertex.
    pub isolated_fragments: usize,
}

pub fn connectivity_report(g: &GraphState, rows: &[ChainSection]) -> ConnectivityReport {
    let mut row_of: BTreeMap<VertexId, usize> = BTreeMap::new();
    for (r, row) in rows.iter().enumerate() {
        for &b in &row.backbone {
            if g.contains(b) {
                row_of.insert(b, r);
            }
        }
    }
    let mut links: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for v in g.vertices().filter(|v| !row_of.contains_key(v)) {
        let touched: BTreeSet<usize> = g.neighbors(v).unwrap().iter().filter_map(|w| row_of.get(w).copied()).collect();
        let touched: Vec<usize> = touched.into_iter().collect();
        for (x, &a) in touched.iter().enumerate() {
            for &b in &touched[x + 1..] {
                *links.entry((a, b)).or_default() += 1;
            }
        }
    }
    let components = g.components();
    let largest = largest_component(g).unwrap_or_default();
    let rows_in_largest = rows.iter().filter(|row| row.backbone.first().is_some_and(|b| largest.contains(b))).count();
    ConnectivityReport {
        components: components.len(),
        largest_component_vertices: largest.len(),
        largest_component_edges: component_edge_count(g, &largest),
        rows_in_largest,
        cross_links: links.into_iter().map(|(rows, links)| CrossLinks { rows, links }).collect(),
        isolated_fragments: components.iter().filter(|c| c.iter().all(|v| !row_of.contains_key(v))).count(),
    }
}

/// Both phases end to end: grow `rows` sections, then cross-link them.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub graph: GraphState,
    pub sections: Vec<ChainSection>,
    pub ledger: AttemptLedger,
    pub phase1_edges: usize,
    pub stats: AssemblyStats,
    pub connectivity: ConnectivityReport,
    pub non_growing: bool,
}

impl Pipeline {
    /// Attempts per edge after phase one, before any cross-linking.
    pub fn phase1_cost_per_edge(&self) -> Option<f64> {
        (self.phase1_edges > 0).then(|| self.stats.phase1_attempts as f64 / self.phase1_edges as f64)
    }
}

pub fn run_pipeline(
    model: &mut EoModel,
    strategy: Strategy,
    rows: usize,
    backbone_len: usize,
    options: &AssemblyOptions,
    limits: &RunLimits,
) -> Result<Pipeline, AssemblyError> {
    let GrownSections { mut graph, mut sections, mut ledger, non_growing } =
        grow_sections(model, strategy, rows, backbone_len, limits)?;
    let phase1_edges = graph.edge_count();
    let stats = assemble(model, &mut graph, &mut sections, &mut ledger, options)?;
    let connectivity = connectivity_report(&graph, &sections);
    Ok(Pipeline { graph, sections, ledger, phase1_edges, stats, connectivity, non_growing })
}
