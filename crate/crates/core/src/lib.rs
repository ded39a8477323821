//! Growing graph (cluster) states with a probabilistic fusion operation.
//!
//! * [`graph`]: graph states and the exact graph-level fusion rule.
//! * [`eo`]: the probabilistic entangling operation and attempt accounting.
//! * [`strategy`]: growth strategies, closed-form costs and Monte Carlo.
//! * [`assembly`]: cross-linking grown chains through their leaves.
//! * [`oracle`]: dense state-vector verification of the fusion rule.

pub mod assembly;
pub mod eo;
pub mod graph;
pub mod oracle;
pub mod strategy;

pub use eo::{AttemptLedger, EoModel, Outcome};
pub use graph::{FusionReport, GraphError, GraphState, VertexId};
pub use strategy::Strategy;
