//! Strategy costs checked three ways: closed forms, an absorbing Markov
//! chain solved numerically here, and Monte Carlo.

use graphforge::eo::{EoContext, EoModel, Outcome, ScriptedOutcomes, DEFAULT_EPR_ATTEMPT_CAP};
use graphforge::strategy::{
    analytic_costs, compare_strategies, cost_s1, estimate_growth, expected_cost_oracle_s2, monte_carlo, run_s2, Grower,
    McConfig, RunLimits, Strategy,
};
use graphforge::GraphState;

/// Absorbing chain where every transition is one EO attempt. `next[s]` is
/// `(on_success, edges_on_success, on_failure, edges_on_failure)`, `None`
/// meaning absorption. Returns expected (attempts, edges) from state 0.
fn absorbing_rewards(p: f64, next: &[(Option<usize>, f64, Option<usize>, f64)]) -> (f64, f64) {
    let n = next.len();
    // (I - Q) x = r, solved for attempts and edges at once
    let mut a = vec![vec![0.0; n + 2]; n];
    for (s, &(succ, es, fail, ef)) in next.iter().enumerate() {
        a[s][s] += 1.0;
        if let Some(t) = succ {
            a[s][t] -= p;
        }
        if let Some(t) = fail {
            a[s][t] -= 1.0 - p;
        }
        a[s][n] = 1.0;
        a[s][n + 1] = p * es + (1.0 - p) * ef;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / pivot_row[col];
                for (x, y) in row.iter_mut().zip(&pivot_row).skip(col) {
                    *x -= f * y;
                }
            }
        }
    }
    (a[0][n] / a[0][0], a[0][n + 1] / a[0][0])
}

/// One S2 lifecycle: two EPR builds, the 3-node fusion, then the
/// attach/repair loop.
fn s2_chain_cost(p: f64) -> f64 {
    const EPR1: usize = 0;
    const EPR2: usize = 1;
    const STAR: usize = 2;
    const ATTACH: usize = 3;
    const REPAIR: usize = 4;
    let chain = [
        (Some(EPR2), 0.0, Some(EPR1), 0.0),
        (Some(STAR), 0.0, Some(EPR2), 0.0),
        (Some(ATTACH), 0.0, Some(EPR1), 0.0),
        (None, 4.0, Some(REPAIR), -1.0),
        (Some(ATTACH), 0.0, None, 0.0),
    ];
    let (attempts, edges) = absorbing_rewards(p, &chain);
    attempts / edges
}

fn s1_chain_cost(p: f64) -> f64 {
    let chain = [(Some(1), 0.0, Some(0), 0.0), (None, 2.0, None, -1.0)];
    let (attempts, edges) = absorbing_rewards(p, &chain);
    attempts / edges
}

#[test]
fn markov_chain_reproduces_closed_forms() {
    // frozen chain values
    assert!((s2_chain_cost(0.5) - 6.0).abs() < 1e-9);
    assert!((s2_chain_cost(0.4) - 13.0).abs() < 1e-9);
    assert!((s2_chain_cost(1.0 / 3.0) - 27.0).abs() < 1e-9);
    assert!((s1_chain_cost(0.4) - 17.5).abs() < 1e-9);
    for k in 1..60 {
        let p = 0.2 + 0.8 * k as f64 / 60.0;
        let oracle = s2_chain_cost(p);
        let closed = expected_cost_oracle_s2(p).unwrap();
        assert!((oracle - closed).abs() < 1e-9 * closed, "p={p}: chain {oracle} closed {closed}");
        if let Some(c) = cost_s1(p) {
            assert!((s1_chain_cost(p) - c).abs() < 1e-9 * c);
        }
    }
}

#[test]
fn compare_table_values() {
    let config = McConfig { runs: 4, target_edges: 50, seed: 3, limits: RunLimits::default() };
    let rows = compare_strategies(&[0.4, 0.5, 0.3], &config).unwrap();
    let a = &rows[0].analytic;
    assert!((a.c_s2.unwrap() - 13.0).abs() < 1e-9 && (a.c_s1.unwrap() - 17.5).abs() < 1e-9);
    assert!(a.c_s2 < a.c_s1);
    let a = &rows[1].analytic;
    assert!((a.c_s2.unwrap() - 6.0).abs() < 1e-9 && (a.c_s1.unwrap() - 6.0).abs() < 1e-9);
    assert!(rows[2].analytic.c_s1.is_none() && rows[2].analytic.c_s2.is_some());
    assert!(rows[0].mc_s1.as_ref().unwrap().std_error.is_some());
}

fn assert_mc_matches(strategy: Strategy, p: f64, runs: u64, target: u64) {
    let config = McConfig { runs, target_edges: target, seed: 0x5eed, limits: RunLimits::default() };
    let (summary, records) = monte_carlo(strategy, p, &config).unwrap();
    let analytic = match strategy {
        Strategy::S1 => analytic_costs(p).c_s1,
        Strategy::S2 => analytic_costs(p).c_s2,
    }
    .unwrap();
    let mc = summary.cost_per_edge.unwrap();
    assert!(summary.cycles >= 100_000, "{strategy} p={p}: only {} cycles", summary.cycles);
    assert_eq!(records.len() as u64, runs);
    assert!((mc - analytic).abs() / analytic < 0.02, "{strategy} p={p}: mc {mc} analytic {analytic}");
}

#[test]
fn s2_monte_carlo_converges() {
    assert_mc_matches(Strategy::S2, 0.5, 200, 1_000);
    assert_mc_matches(Strategy::S2, 0.4, 200, 1_000);
    assert_mc_matches(Strategy::S2, 0.3, 100, 2_000);
    assert_mc_matches(Strategy::S2, 0.25, 40, 5_000);
}

#[test]
fn s1_monte_carlo_converges() {
    for p in [0.4, 0.45, 0.5] {
        assert_mc_matches(Strategy::S1, p, 200, 1_000);
    }
}

#[test]
fn s2_at_one_third_matches_direct_evaluation() {
    assert_mc_matches(Strategy::S2, 1.0 / 3.0, 100, 2_000);
}

#[test]
fn attach_deltas_take_only_the_predicted_values() {
    for (strategy, up) in [(Strategy::S1, 2), (Strategy::S2, 4)] {
        let mut g = GraphState::new();
        let mut m = EoModel::new(0.45, 77).unwrap();
        let mut grower = Grower::new(strategy, DEFAULT_EPR_ATTEMPT_CAP);
        grower.ensure_seeded(&mut m, &mut g).unwrap();
        while grower.state().edges() < 3_000 {
            grower.step(&mut m, &mut g).unwrap();
        }
        // the active end is isolated only while the cluster is a single
        // vertex, where a failure loses nothing and a success adds one less
        let deltas = grower.attach_deltas();
        let steady = deltas.get(&up).copied().unwrap_or(0) + deltas.get(&-1).copied().unwrap_or(0);
        let total: u64 = deltas.values().sum();
        let boundary: u64 = deltas.iter().filter(|(d, _)| **d != up && **d != -1).map(|(_, c)| *c).sum();
        assert!(deltas.keys().all(|d| [up, -1, 0].contains(d)), "{strategy}: {deltas:?}");
        assert!(boundary <= grower.reseeds(), "{strategy}: {deltas:?}");
        assert_eq!(steady + boundary, total);
    }
}

#[test]
fn single_runs_are_reproducible() {
    let limits = RunLimits::default();
    let mut a = EoModel::new(0.4, 8).unwrap();
    let mut b = EoModel::new(0.4, 8).unwrap();
    assert_eq!(run_s2(&mut a, 500, &limits).unwrap(), run_s2(&mut b, 500, &limits).unwrap());
}

#[test]
fn s2_keeps_growing_at_one_quarter() {
    let mut m = EoModel::new(0.25, 12).unwrap();
    let s = run_s2(&mut m, 2_000, &RunLimits::default()).unwrap();
    assert!(!s.non_growing);
    assert!(s.cost_per_edge.unwrap().is_finite());
}

#[test]
fn growth_slope_sign_follows_threshold() {
    let limits = RunLimits::default();
    let slope = |strategy, p| {
        let mut m = EoModel::new(p, 31).unwrap();
        estimate_growth(strategy, &mut m, 200_000, 40, &limits).unwrap()
    };
    assert!(slope(Strategy::S1, 0.45).grows(3.0));
    assert!(!slope(Strategy::S1, 0.3).grows(3.0));
    assert!(slope(Strategy::S2, 0.3).grows(3.0));
    assert!(!slope(Strategy::S2, 0.15).grows(3.0));
}

#[test]
fn scripted_outcomes_reproduce_redundant_end() {
    let script = [Outcome::Success, Outcome::Failure, Outcome::Failure];
    let mut src = ScriptedOutcomes::new(EoContext::Attach, script);
    let mut g = GraphState::new();
    let mut grower = Grower::new(Strategy::S1, DEFAULT_EPR_ATTEMPT_CAP);
    grower.ensure_seeded(&mut src, &mut g).unwrap();
    let mut lengths = vec![grower.state().backbone().len()];
    for _ in 0..3 {
        grower.step(&mut src, &mut g).unwrap();
        lengths.push(grower.state().backbone().len());
    }
    assert_eq!(lengths, vec![2, 3, 3, 2]);
}
