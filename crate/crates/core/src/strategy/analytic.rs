//! Closed-form expected costs per edge.
//!
//! Costs count every EO attempt, including those spent building EPR pairs
//! and 3-nodes. Entries are `None` where the strategy does not grow.

use serde::{Deserialize, Serialize};

/// Net growth thresholds: a strategy grows only for `p` strictly above these.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub s1: f64,
    pub s2: f64,
    pub bk: f64,
}

pub const THRESHOLDS: Thresholds = Thresholds { s1: 1.0 / 3.0, s2: 1.0 / 5.0, bk: 1.0 / 3.0 };

/// Published costs of the chunk-based baseline with recycling. Only known at
/// these two probabilities.
pub const BK_RECYCLED_REFERENCE: [(f64, f64); 2] = [(0.5, 12.0), (0.4, 41.25)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticCosts {
    pub p: f64,
    pub c_s1: Option<f64>,
    pub c_s2: Option<f64>,
    pub c3_bk: Option<f64>,
    pub c3_bk_recycled_ref: Option<f64>,
    pub thresholds: Thresholds,
}

pub fn analytic_costs(p: f64) -> AnalyticCosts {
    AnalyticCosts {
        p,
        c_s1: cost_s1(p),
        c_s2: expected_cost_oracle_s2(p),
        c3_bk: cost_c3_bk(p),
        c3_bk_recycled_ref: bk_recycled_reference(p),
        thresholds: THRESHOLDS,
    }
}

/// Chunk-of-three baseline: `(p^-2 + p^-1 + 1) / (3p - 1)`.
pub fn cost_c3_bk(p: f64) -> Option<f64> {
    let denom = 3.0 * p - 1.0;
    (denom > 0.0).then(|| (p.powi(-2) + p.recip() + 1.0) / denom)
}

/// S1: each cycle spends `1/p` on an EPR pair plus one attach attempt and
/// gains `+2` or `-1` edges, so the drift per cycle is `3p - 1`.
pub fn cost_s1(p: f64) -> Option<f64> {
    let denom = 3.0 * p - 1.0;
    (denom > 0.0).then(|| (p.recip() + 1.0) / denom)
}

/// Components of the S2 renewal cycle (one consumed 3-node).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct S2Cycle {
    /// Expected attempts to build one 3-node: `(2/p + 1) / p`.
    pub build: f64,
    /// Expected attach plus repair attempts per 3-node: `(2 - p) / (1 - p + p^2)`.
    pub attach: f64,
    /// Expected net edges per 3-node: `(5p - 1) / (1 - p + p^2)`.
    pub edges: f64,
}

pub fn s2_cycle(p: f64) -> S2Cycle {
    let loop_norm = 1.0 - p + p * p;
    S2Cycle { build: (2.0 / p + 1.0) / p, attach: (2.0 - p) / loop_norm, edges: (5.0 * p - 1.0) / loop_norm }
}

/// Expected S2 cost per edge, `(build + attach) / edges`.
pub fn expected_cost_oracle_s2(p: f64) -> Option<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return None;
    }
    let cycle = s2_cycle(p);
    (cycle.edges > 0.0).then(|| (cycle.build + cycle.attach) / cycle.edges)
}

pub fn bk_recycled_reference(p: f64) -> Option<f64> {
    BK_RECYCLED_REFERENCE.iter().find(|(q, _)| (q - p).abs() < 1e-12).map(|&(_, c)| c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Option<f64>, b: f64) -> bool {
        a.is_some_and(|a| (a - b).abs() < 1e-9)
    }

    #[test]
    fn baseline_costs() {
        assert!(close(cost_c3_bk(0.5), 14.0));
        assert!(close(cost_c3_bk(0.4), 48.75));
        assert_eq!(cost_c3_bk(1.0 / 3.0), None);
    }

    #[test]
    fn s2_costs() {
        assert!(close(expected_cost_oracle_s2(0.5), 6.0));
        assert!(close(expected_cost_oracle_s2(0.4), 13.0));
        let c = s2_cycle(0.5);
        assert!((c.build - 10.0).abs() < 1e-12 && (c.attach - 2.0).abs() < 1e-12 && (c.edges - 2.0).abs() < 1e-12);
        let c = s2_cycle(0.4);
        assert!((c.build - 15.0).abs() < 1e-12);
        assert!((c.attach - 1.6 / 0.76).abs() < 1e-12);
        assert!((c.edges - 1.0 / 0.76).abs() < 1e-12);
        assert_eq!(expected_cost_oracle_s2(0.2), None);
        assert_eq!(expected_cost_oracle_s2(0.1), None);
    }

    #[test]
    fn s2_diverges_at_threshold() {
        let near = expected_cost_oracle_s2(0.2 + 1e-9).unwrap();
        assert!(near > 1e9);
        let a = expected_cost_oracle_s2(0.21).unwrap();
        let b = expected_cost_oracle_s2(0.201).unwrap();
        assert!(b > a);
    }

    #[test]
    fn s1_costs() {
        assert!(close(cost_s1(0.5), 6.0));
        assert!(close(cost_s1(0.4), 17.5));
        assert!(close(cost_s1(0.45), (1.0 / 0.45 + 1.0) / 0.35));
        assert_eq!(cost_s1(0.3), None);
        assert_eq!(cost_s1(1.0 / 3.0), None);
    }

    #[test]
    fn at_one_third_only_s2_is_defined() {
        let a = analytic_costs(1.0 / 3.0);
        assert_eq!((a.c_s1, a.c3_bk), (None, None));
        // (7*3 + (5/3)/(7/9)) / ((2/3)/(7/9)) = 27
        let direct = ((6.0 + 1.0) * 3.0 + (5.0 / 3.0) / (7.0 / 9.0)) / ((2.0 / 3.0) / (7.0 / 9.0));
        assert!(close(a.c_s2, direct));
        assert!(close(a.c_s2, 27.0));
    }

    #[test]
    fn reference_constants() {
        assert_eq!(analytic_costs(0.5).c3_bk_recycled_ref, Some(12.0));
        assert_eq!(analytic_costs(0.4).c3_bk_recycled_ref, Some(41.25));
        assert_eq!(analytic_costs(0.45).c3_bk_recycled_ref, None);
    }

    #[test]
    fn s2_beats_s1_inside_interval() {
        for i in 1..=100 {
            let p = 0.2 + 0.3 * i as f64 / 101.0;
            let s2 = expected_cost_oracle_s2(p).unwrap();
            if let Some(s1) = cost_s1(p) {
                assert!(s2 < s1, "p={p}: s2={s2} s1={s1}");
            }
        }
    }
}
