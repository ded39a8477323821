//! Abstract graph states and the graph-level effect of a fusion event.
//!
//! Vertices are qubits prepared in `|+>`, edges are controlled-Z bonds. A
//! successful fusion merges two non-adjacent vertices into one vertex that
//! inherits the symmetric difference of their neighbourhoods and carries a
//! fresh degree-1 leaf. A failed fusion deletes both vertices.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Label of a vertex. Ids are handed out monotonically and never reused by
/// the graph that issued them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub u64);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("self-loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("cannot fuse adjacent vertices {0} and {1}")]
    AdjacentFusion(VertexId, VertexId),
    #[error("malformed edge list at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Effect of a single fusion event on the graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionReport {
    /// Merged vertex on success. On failure this is the first input, which no
    /// longer exists.
    pub fused_vertex: VertexId,
    pub leaf_vertex: Option<VertexId>,
    pub removed: Vec<VertexId>,
    /// Change in the total edge count of the graph.
    pub edge_delta: i64,
}

impl FusionReport {
    pub fn succeeded(&self) -> bool {
        self.leaf_vertex.is_some()
    }
}

/// Undirected simple graph over [`VertexId`]s.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GraphState {
    adjacency: BTreeMap<VertexId, BTreeSet<VertexId>>,
    next_id: u64,
    edge_count: usize,
}

impl GraphState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph on `n` isolated vertices labelled `0..n`.
    pub fn with_vertices(n: usize) -> Self {
        let mut g = Self::new();
        for _ in 0..n {
            g.add_vertex();
        }
        g
    }

    pub fn add_vertex(&mut self) -> VertexId {
        let id = VertexId(self.next_id);
        self.next_id += 1;
        self.adjacency.insert(id, BTreeSet::new());
        id
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.adjacency.contains_key(&v)
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Vertices in ascending id order.
    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.adjacency.keys().copied()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.adjacency.iter().flat_map(|(&u, nbrs)| nbrs.range(u..).map(move |&v| (u, v)))
    }

    pub fn neighbors(&self, v: VertexId) -> Result<&BTreeSet<VertexId>, GraphError> {
        self.adjacency.get(&v).ok_or(GraphError::UnknownVertex(v))
    }

    pub fn degree(&self, v: VertexId) -> Result<usize, GraphError> {
        self.neighbors(v).map(BTreeSet::len)
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adjacency.get(&u).is_some_and(|n| n.contains(&v))
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<(), GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        self.require(u)?;
        self.require(v)?;
        if self.adjacency.get_mut(&u).unwrap().insert(v) {
            self.adjacency.get_mut(&v).unwrap().insert(u);
            self.edge_count += 1;
        }
        Ok(())
    }

    /// Deletes `v` together with its incident edges, returning its former
    /// neighbourhood. Models a Z-measurement of the qubit.
    pub fn remove_vertex(&mut self, v: VertexId) -> Result<BTreeSet<VertexId>, GraphError> {
        let nbrs = self.adjacency.remove(&v).ok_or(GraphError::UnknownVertex(v))?;
        for w in &nbrs {
            self.adjacency.get_mut(w).unwrap().remove(&v);
        }
        self.edge_count -= nbrs.len();
        Ok(nbrs)
    }

    /// Checks the preconditions shared by both fusion outcomes.
    pub fn check_fusable(&self, u: VertexId, v: VertexId) -> Result<(), GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        self.require(u)?;
        self.require(v)?;
        if self.has_edge(u, v) {
            return Err(GraphError::AdjacentFusion(u, v));
        }
        Ok(())
    }

    /// Successful fusion of the non-adjacent pair `u`, `v`.
    pub fn fuse_success(&mut self, u: VertexId, v: VertexId) -> Result<FusionReport, GraphError> {
        self.check_fusable(u, v)?;
        let before = self.edge_count as i64;
        let nu = self.remove_vertex(u)?;
        let nv = self.remove_vertex(v)?;
        let fused = self.add_vertex();
        for &w in nu.symmetric_difference(&nv) {
            self.add_edge(fused, w)?;
        }
        let leaf = self.add_vertex();
        self.add_edge(fused, leaf)?;
        Ok(FusionReport {
            fused_vertex: fused,
            leaf_vertex: Some(leaf),
            removed: vec![u, v],
            edge_delta: self.edge_count as i64 - before,
        })
    }

    /// Destructive failure: both inputs are deleted with their edges.
    pub fn fuse_failure(&mut self, u: VertexId, v: VertexId) -> Result<FusionReport, GraphError> {
        self.check_fusable(u, v)?;
        let du = self.remove_vertex(u)?.len() as i64;
        let dv = self.remove_vertex(v)?.len() as i64;
        Ok(FusionReport { fused_vertex: u, leaf_vertex: None, removed: vec![u, v], edge_delta: -du - dv })
    }

    /// Vertices of the connected component containing `anchor`, ascending.
    pub fn component(&self, anchor: VertexId) -> Result<BTreeSet<VertexId>, GraphError> {
        self.require(anchor)?;
        let mut seen = BTreeSet::from([anchor]);
        let mut queue = VecDeque::from([anchor]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[&v] {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        Ok(seen)
    }

    pub fn component_edges(&self, anchor: VertexId) -> Result<usize, GraphError> {
        let comp = self.component(anchor)?;
        let degree_sum: usize = comp.iter().map(|v| self.adjacency[v].len()).sum();
        Ok(degree_sum / 2)
    }

    /// All connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<BTreeSet<VertexId>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for v in self.vertices() {
            if seen.contains(&v) {
                continue;
            }
            let comp = self.component(v).unwrap();
            seen.extend(comp.iter().copied());
            out.push(comp);
        }
        out
    }

    /// Degree-1 vertices in ascending id order.
    pub fn leaves(&self) -> Vec<VertexId> {
        self.adjacency.iter().filter(|(_, n)| n.len() == 1).map(|(&v, _)| v).collect()
    }

    /// Renders the graph as an edge list with ids compacted to `0..n` in
    /// ascending original order.
    pub fn to_edge_list(&self) -> String {
        let index: BTreeMap<VertexId, usize> = self.vertices().enumerate().map(|(i, v)| (v, i)).collect();
        let mut out = format!("vertices={} edges={}\n", self.vertex_count(), self.edge_count);
        for (u, v) in self.edges() {
            out.push_str(&format!("{} {}\n", index[&u], index[&v]));
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let err = |line: usize, reason: &str| GraphError::Parse { line, reason: reason.to_string() };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| err(1, "missing header"))?;
        let (n, m) = parse_header(header).ok_or_else(|| err(1, "expected `vertices=<n> edges=<m>`"))?;
        let mut g = Self::with_vertices(n);
        for (i, line) in lines {
            let mut parts = line.split_whitespace();
            let pair = (parts.next(), parts.next(), parts.next());
            let (Some(a), Some(b), None) = pair else {
                return Err(err(i + 1, "expected `u v`"));
            };
            let a: u64 = a.parse().map_err(|_| err(i + 1, "bad vertex id"))?;
            let b: u64 = b.parse().map_err(|_| err(i + 1, "bad vertex id"))?;
            g.add_edge(VertexId(a), VertexId(b)).map_err(|e| err(i + 1, &e.to_string()))?;
        }
        if g.edge_count != m {
            return Err(err(1, &format!("header declares {m} edges, found {}", g.edge_count)));
        }
        Ok(g)
    }

    fn require(&self, v: VertexId) -> Result<(), GraphError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(GraphError::UnknownVertex(v))
        }
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut parts = line.split_whitespace();
    let n = parts.next()?.strip_prefix("vertices=")?.parse().ok()?;
    let m = parts.next()?.strip_prefix("edges=")?.parse().ok()?;
    parts.next().is_none().then_some((n, m))
}
