//! Dense state-vector check of the graph-level fusion rule.
//!
//! A graph state is built amplitude by amplitude, the pair `(u, v)` goes
//! through the measurement algebra of one entangling operation (X on `u`,
//! one of four measurement operators, corrections, Hadamard on `v`), and the
//! result is compared against the graph predicted by a fusion rule.
//!
//! Qubit `k` is bit `k` of the amplitude index; qubits are assigned to
//! vertices in ascending id order.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{FusionReport, GraphError, GraphState, VertexId};

pub const DEFAULT_QUBIT_CAP: usize = 14;
/// Outcomes less likely than this have no post-measurement state.
pub const ZERO_PROBABILITY: f64 = 1e-14;
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;
pub const FIDELITY_TOLERANCE: f64 = 1e-10;
/// Largest graph enumerated exhaustively by [`sweep_verify`].
pub const EXHAUSTIVE_MAX_VERTICES: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{0} qubits exceeds the cap of {1}")]
    TooManyQubits(usize, usize),
    #[error("qubit index {0} out of range for {1} qubits")]
    QubitOutOfRange(usize, usize),
    #[error("measurement needs two distinct qubits, got {0} twice")]
    SameQubit(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n` qubits.
    pub fn zero(n: usize, cap: usize) -> Result<Self, OracleError> {
        if n > cap {
            return Err(OracleError::TooManyQubits(n, cap));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Self {
        assert!(amps.len().is_power_of_two(), "amplitude count must be a power of two");
        Self { n: amps.len().trailing_zeros() as usize, amps }
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|<self|other>|^2`, insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    fn check(&self, qubit: usize) -> Result<(), OracleError> {
        if qubit < self.n {
            Ok(())
        } else {
            Err(OracleError::QubitOutOfRange(qubit, self.n))
        }
    }

    fn scale(&mut self, s: f64) {
        for a in &mut self.amps {
            *a *= s;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gate {
    X,
    Z,
    H,
}

pub fn apply_local(sv: &mut StateVector, gate: Gate, qubit: usize) -> Result<(), OracleError> {
    sv.check(qubit)?;
    let bit = 1usize << qubit;
    match gate {
        Gate::X => {
            for i in (0..sv.amps.len()).filter(|i| i & bit == 0) {
                sv.amps.swap(i, i | bit);
            }
        }
        Gate::Z => {
            for (i, a) in sv.amps.iter_mut().enumerate() {
                if i & bit != 0 {
                    *a = -*a;
                }
            }
        }
        Gate::H => {
            for i in (0..sv.amps.len()).filter(|i| i & bit == 0) {
                let (a0, a1) = (sv.amps[i], sv.amps[i | bit]);
                sv.amps[i] = (a0 + a1) * FRAC_1_SQRT_2;
                sv.amps[i | bit] = (a0 - a1) * FRAC_1_SQRT_2;
            }
        }
    }
    Ok(())
}

/// Graph state with an explicit vertex-to-qubit assignment.
pub fn make_graph_state_ordered(g: &GraphState, order: &[VertexId], cap: usize) -> Result<StateVector, OracleError> {
    let n = order.len();
    if n > cap {
        return Err(OracleError::TooManyQubits(n, cap));
    }
    let pos = |v: VertexId| order.iter().position(|&w| w == v).ok_or(GraphError::UnknownVertex(v));
    let mut edge_masks = Vec::with_capacity(g.edge_count());
    for (a, b) in g.edges() {
        edge_masks.push((1usize << pos(a)?) | (1usize << pos(b)?));
    }
    if order.len() != g.vertex_count() {
        let missing = g.vertices().find(|v| !order.contains(v)).unwrap();
        return Err(GraphError::UnknownVertex(missing).into());
    }
    let amp = (1u64 << n) as f64;
    let amp = amp.sqrt().recip();
    let amps = (0..1usize << n)
        .map(|i| {
            let parity = edge_masks.iter().filter(|&&m| i & m == m).count() % 2;
            Complex64::new(if parity == 0 { amp } else { -amp }, 0.0)
        })
        .collect();
    Ok(StateVector { n, amps })
}

/// `|+>` on every vertex followed by a controlled-Z per edge.
pub fn make_graph_state(g: &GraphState, cap: usize) -> Result<StateVector, OracleError> {
    let order: Vec<_> = g.vertices().collect();
    make_graph_state_ordered(g, &order, cap)
}

/// The four outcomes of the entangling operation on the pair `(u, v)`.
/// `P00` and `P11` are the destructive failures; `Plus` and `Minus` are the
/// successes `(|10><10| ± |01><01|) / sqrt(2)`, which keep the coherence
/// between `|10>` and `|01>`. Labels give the value of `(u, v)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measurement {
    P00,
    P11,
    Plus,
    Minus,
}

impl Measurement {
    pub const ALL: [Measurement; 4] = [Measurement::P00, Measurement::P11, Measurement::Plus, Measurement::Minus];

    pub fn is_success(self) -> bool {
        matches!(self, Measurement::Plus | Measurement::Minus)
    }

    /// Amplitude factor applied to a basis state with the given bits on
    /// `(u, v)`.
    fn factor(self, bu: bool, bv: bool) -> f64 {
        match (self, bu, bv) {
            (Measurement::P00, false, false) | (Measurement::P11, true, true) => 1.0,
            (Measurement::Plus, true, false) | (Measurement::Plus, false, true) => FRAC_1_SQRT_2,
            (Measurement::Minus, true, false) => FRAC_1_SQRT_2,
            (Measurement::Minus, false, true) => -FRAC_1_SQRT_2,
            _ => 0.0,
        }
    }
}

/// Applies one measurement operator to qubits `u`, `v`. Returns the outcome
/// probability and the normalised post-state, or `None` for an outcome that
/// cannot occur.
pub fn project(
    sv: &StateVector,
    op: Measurement,
    u: usize,
    v: usize,
) -> Result<(f64, Option<StateVector>), OracleError> {
    sv.check(u)?;
    sv.check(v)?;
    if u == v {
        return Err(OracleError::SameQubit(u));
    }
    let (bu, bv) = (1usize << u, 1usize << v);
    let amps: Vec<Complex64> =
        sv.amps.iter().enumerate().map(|(i, a)| a * op.factor(i & bu != 0, i & bv != 0)).collect();
    let mut post = StateVector { n: sv.n, amps };
    let prob = post.norm_sqr();
    if prob < ZERO_PROBABILITY {
        return Ok((prob, None));
    }
    post.scale(prob.sqrt().recip());
    Ok((prob, Some(post)))
}

/// Graph-level fusion rule under test.
pub type FusionRule = fn(&mut GraphState, VertexId, VertexId) -> Result<FusionReport, GraphError>;

/// The rule implemented by [`GraphState::fuse_success`].
pub fn symmetric_difference_rule(g: &mut GraphState, u: VertexId, v: VertexId) -> Result<FusionReport, GraphError> {
    g.fuse_success(u, v)
}

/// Deliberately wrong rule that keeps bonds to common neighbours. Only
/// useful as a negative control for the oracle.
pub fn neighbourhood_union_rule(g: &mut GraphState, u: VertexId, v: VertexId) -> Result<FusionReport, GraphError> {
    g.check_fusable(u, v)?;
    let before = g.edge_count() as i64;
    let nu = g.remove_vertex(u)?;
    let nv = g.remove_vertex(v)?;
    let fused = g.add_vertex();
    for &w in nu.union(&nv) {
        g.add_edge(fused, w)?;
    }
    let leaf = g.add_vertex();
    g.add_edge(fused, leaf)?;
    Ok(FusionReport {
        fused_vertex: fused,
        leaf_vertex: Some(leaf),
        removed: vec![u, v],
        edge_delta: g.edge_count() as i64 - before,
    })
}

/// Pauli-Z byproduct left on the surviving graph by a failure outcome: the
/// `|00>` branch carries `Z` on every neighbour of `u`, the `|11>` branch on
/// every neighbour of `v`.
pub fn failure_byproduct<'a>(
    op: Measurement,
    nu: &'a BTreeSet<VertexId>,
    nv: &'a BTreeSet<VertexId>,
) -> Option<&'a BTreeSet<VertexId>> {
    match op {
        Measurement::P00 => Some(nu),
        Measurement::P11 => Some(nv),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeCheck {
    pub outcome: Measurement,
    pub probability: f64,
    /// Fidelity of the corrected post-state with the predicted state.
    pub fidelity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub qubits: usize,
    pub u: VertexId,
    pub v: VertexId,
    pub outcomes: Vec<OutcomeCheck>,
    pub total_probability: f64,
    pub success_probability: f64,
    pub pass: bool,
}

impl VerificationReport {
    pub fn outcome(&self, op: Measurement) -> &OutcomeCheck {
        self.outcomes.iter().find(|o| o.outcome == op).unwrap()
    }

    /// Human-readable reasons the report failed.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for o in &self.outcomes {
            let expected = 0.25;
            if matches!(o.outcome, Measurement::P00 | Measurement::P11)
                && (o.probability - expected).abs() > PROBABILITY_TOLERANCE
            {
                out.push(format!("{:?} probability {} != 1/4", o.outcome, o.probability));
            }
            if let Some(f) = o.fidelity {
                if f < 1.0 - FIDELITY_TOLERANCE {
                    out.push(format!("{:?} fidelity {f}", o.outcome));
                }
            }
        }
        if (self.success_probability - 0.5).abs() > PROBABILITY_TOLERANCE {
            out.push(format!("success probability {} != 1/2", self.success_probability));
        }
        if (self.total_probability - 1.0).abs() > PROBABILITY_TOLERANCE {
            out.push(format!("total probability {} != 1", self.total_probability));
        }
        out
    }
}

/// Checks [`GraphState::fuse_success`] and the deletion model of failures
/// against the exact measurement algebra.
pub fn verify_fusion_rule(
    g: &GraphState,
    u: VertexId,
    v: VertexId,
    cap: usize,
) -> Result<VerificationReport, OracleError> {
    verify_with_rule(g, u, v, cap, symmetric_difference_rule)
}

pub fn verify_with_rule(
    g: &GraphState,
    u: VertexId,
    v: VertexId,
    cap: usize,
    rule: FusionRule,
) -> Result<VerificationReport, OracleError> {
    g.check_fusable(u, v)?;
    let order: Vec<VertexId> = g.vertices().collect();
    let qu = order.iter().position(|&w| w == u).unwrap();
    let qv = order.iter().position(|&w| w == v).unwrap();

    let mut psi = make_graph_state_ordered(g, &order, cap)?;
    apply_local(&mut psi, Gate::X, qu)?;

    let mut fused = g.clone();
    let report = rule(&mut fused, u, v)?;
    let fused_order: Vec<VertexId> = order
        .iter()
        .map(|&w| match w {
            w if w == u => report.fused_vertex,
            w if w == v => report.leaf_vertex.unwrap_or(w),
            w => w,
        })
        .collect();
    let fused_state = make_graph_state_ordered(&fused, &fused_order, cap)?;

    let nu = g.neighbors(u)?.clone();
    let nv = g.neighbors(v)?.clone();
    let mut remainder = g.clone();
    remainder.remove_vertex(u)?;
    remainder.remove_vertex(v)?;
    let remainder_order: Vec<VertexId> = remainder.vertices().collect();
    let remainder_state = make_graph_state_ordered(&remainder, &remainder_order, cap)?;

    let mut outcomes = Vec::with_capacity(4);
    for op in Measurement::ALL {
        let (probability, post) = project(&psi, op, qu, qv)?;
        let fidelity = match post {
            None => None,
            Some(mut post) if op.is_success() => {
                apply_local(&mut post, Gate::X, qu)?;
                if op == Measurement::Minus {
                    apply_local(&mut post, Gate::Z, qu)?;
                }
                apply_local(&mut post, Gate::H, qv)?;
                Some(fused_state.fidelity(&post))
            }
            Some(mut post) => {
                for w in failure_byproduct(op, &nu, &nv).unwrap() {
                    let q = order.iter().position(|x| x == w).unwrap();
                    apply_local(&mut post, Gate::Z, q)?;
                }
                let bit = op == Measurement::P11;
                let expected = embed_with_pair(&remainder_state, psi.n, qu, qv, bit);
                Some(expected.fidelity(&post))
            }
        };
        outcomes.push(OutcomeCheck { outcome: op, probability, fidelity });
    }
    let total_probability = outcomes.iter().map(|o| o.probability).sum();
    let success_probability = outcomes.iter().filter(|o| o.outcome.is_success()).map(|o| o.probability).sum();
    let mut out =
        VerificationReport { qubits: psi.n, u, v, outcomes, total_probability, success_probability, pass: false };
    out.pass = out.problems().is_empty();
    Ok(out)
}

/// `|b>_u |b>_v ⊗ rest`, with `rest` occupying the remaining qubits in order.
fn embed_with_pair(rest: &StateVector, n: usize, qu: usize, qv: usize, bit: bool) -> StateVector {
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    let pair_bits = if bit { (1 << qu) | (1 << qv) } else { 0 };
    for (r, &a) in rest.amps.iter().enumerate() {
        // spread the bits of r over the qubits other than qu, qv
        let mut full = 0usize;
        let mut k = 0;
        for q in 0..n {
            if q == qu || q == qv {
                continue;
            }
            if r >> k & 1 == 1 {
                full |= 1 << q;
            }
            k += 1;
        }
        amps[full | pair_bits] = a;
    }
    StateVector { n, amps }
}

/// One verification input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyCase {
    pub graph: GraphState,
    pub u: VertexId,
    pub v: VertexId,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseFailure {
    pub graph: String,
    pub u: u64,
    pub v: u64,
    pub problems: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub max_qubits: usize,
    pub samples: usize,
    pub seed: u64,
    pub cases: usize,
    pub passed: usize,
    pub skipped_adjacent: usize,
    pub failures: Vec<CaseFailure>,
    /// Largest deviation from 1/4 over the failure outcomes.
    pub max_probability_error: f64,
    pub min_fidelity: f64,
}

impl SweepSummary {
    pub fn pass(&self) -> bool {
        self.failures.is_empty() && self.passed == self.cases
    }
}

/// Every graph on `2..=min(5, max_qubits)` vertices with every ordered marked
/// pair, then `samples` random graphs on up to `max_qubits` vertices. Returns
/// the cases and the number of adjacent pairs that were skipped.
pub fn sweep_cases(max_qubits: usize, samples: usize, seed: u64) -> (Vec<VerifyCase>, usize) {
    let mut cases = Vec::new();
    let mut skipped = 0;
    for n in 2..=max_qubits.min(EXHAUSTIVE_MAX_VERTICES) {
        let pairs: Vec<(u64, u64)> = (0..n as u64).flat_map(|a| (a + 1..n as u64).map(move |b| (a, b))).collect();
        for mask in 0u64..1 << pairs.len() {
            let mut g = GraphState::with_vertices(n);
            for (k, &(a, b)) in pairs.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    g.add_edge(VertexId(a), VertexId(b)).unwrap();
                }
            }
            for u in 0..n as u64 {
                for v in (0..n as u64).filter(|&v| v != u) {
                    let (u, v) = (VertexId(u), VertexId(v));
                    if g.has_edge(u, v) {
                        skipped += 1;
                    } else {
                        cases.push(VerifyCase { graph: g.clone(), u, v });
                    }
                }
            }
        }
    }
    if max_qubits >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let n = rng.gen_range(2..=max_qubits);
            let mut g = GraphState::with_vertices(n);
            for a in 0..n as u64 {
                for b in a + 1..n as u64 {
                    if rng.gen_bool(0.5) {
                        g.add_edge(VertexId(a), VertexId(b)).unwrap();
                    }
                }
            }
            let open: Vec<(VertexId, VertexId)> = g
                .vertices()
                .flat_map(|a| g.vertices().map(move |b| (a, b)))
                .filter(|&(a, b)| a != b && !g.has_edge(a, b))
                .collect();
            if open.is_empty() {
                skipped += 1;
                continue;
            }
            let (u, v) = open[rng.gen_range(0..open.len())];
            cases.push(VerifyCase { graph: g, u, v });
        }
    }
    (cases, skipped)
}

pub fn sweep_verify(max_qubits: usize, samples: usize, seed: u64, cap: usize) -> Result<SweepSummary, OracleError> {
    sweep_verify_with_rule(max_qubits, samples, seed, cap, symmetric_difference_rule)
}

pub fn sweep_verify_with_rule(
    max_qubits: usize,
    samples: usize,
    seed: u64,
    cap: usize,
    rule: FusionRule,
) -> Result<SweepSummary, OracleError> {
    if max_qubits > cap {
        return Err(OracleError::TooManyQubits(max_qubits, cap));
    }
    let (cases, skipped_adjacent) = sweep_cases(max_qubits, samples, seed);
    let reports: Vec<VerificationReport> =
        cases.par_iter().map(|c| verify_with_rule(&c.graph, c.u, c.v, cap, rule)).collect::<Result<_, _>>()?;
    let mut summary = SweepSummary {
        max_qubits,
        samples,
        seed,
        cases: cases.len(),
        skipped_adjacent,
        min_fidelity: 1.0,
        ..SweepSummary::default()
    };
    for (case, report) in cases.iter().zip(&reports) {
        for o in &report.outcomes {
            if !o.outcome.is_success() {
                summary.max_probability_error = summary.max_probability_error.max((o.probability - 0.25).abs());
            }
            if let Some(f) = o.fidelity {
                summary.min_fidelity = summary.min_fidelity.min(f);
            }
        }
        if report.pass {
            summary.passed += 1;
        } else {
            summary.failures.push(CaseFailure {
                graph: case.graph.to_edge_list(),
                u: case.u.0,
                v: case.v.0,
                problems: report.problems(),
            });
        }
    }
    Ok(summary)
}
