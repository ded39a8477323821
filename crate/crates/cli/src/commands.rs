use std::process::ExitCode;

use anyhow::Context;
use graphforge::assembly::{run_pipeline, AssemblyOptions, RowPairing};
use graphforge::eo::{run_seed, EoModel};
use graphforge::oracle::{
    neighbourhood_union_rule, sweep_verify_with_rule, symmetric_difference_rule, SweepSummary, DEFAULT_QUBIT_CAP,
};
use graphforge::strategy::{analytic_costs, estimate_growth, monte_carlo, McConfig, RunLimits, RunRecord};
use graphforge::Strategy;
use serde::Serialize;

use crate::output::{emit, json, opt, tidy, Csv};
use crate::settings::{check_positive, check_probabilities, spec_error, ConfigFile, Format, DEFAULT_SEED};
use crate::{AssembleArgs, Common, SweepArgs, TableArgs, VerifyArgs};

const SWEEP_P: [f64; 6] = [0.25, 0.3, 0.35, 0.4, 0.45, 0.5];
const TABLE_P: [f64; 2] = [0.5, 0.4];

/// Attach attempts and batches for the growth check run in place of Monte
/// Carlo where no closed-form cost exists.
const SLOPE_ATTACH_BUDGET: u64 = 50_000;
const SLOPE_BATCHES: usize = 25;
const SLOPE_SIGMAS: f64 = 3.0;

struct Resolved {
    config: ConfigFile,
    seed: u64,
    format: Format,
    out: Option<std::path::PathBuf>,
}

fn resolve_common(common: Common) -> anyhow::Result<Resolved> {
    let config = ConfigFile::load(common.config.as_deref())?;
    let seed = config.pick(common.seed, "seed", DEFAULT_SEED)?;
    let format = config.pick(common.format, "format", Format::Csv)?;
    let out = config.pick_optional_path(common.out, "out");
    Ok(Resolved { config, seed, format, out })
}

#[derive(Serialize)]
struct SweepRow {
    strategy: Strategy,
    p: f64,
    runs: u64,
    target_edges: u64,
    analytic_cost: Option<f64>,
    mc_cost: Option<f64>,
    std_error: Option<f64>,
    relative_error: Option<f64>,
    attempts: u64,
    net_edges: i64,
    cycles: u64,
    /// z-score of the growth check, only run where no closed form exists.
    growth_z: Option<f64>,
    non_growing: bool,
}

#[derive(Serialize)]
struct SweepReport {
    seed: u64,
    rows: Vec<SweepRow>,
}

pub fn sweep(args: SweepArgs) -> anyhow::Result<ExitCode> {
    let r = resolve_common(args.common)?;
    let mut strategies = r.config.pick_list(args.strategy, "strategy", &[Strategy::S1, Strategy::S2])?;
    let mut ps = r.config.pick_list(args.p, "p", &SWEEP_P)?;
    let trials = r.config.pick(args.trials, "trials", 200)?;
    let target_edges = r.config.pick(args.target_edges, "target_edges", 100)?;
    let runs_out = r.config.pick_optional_path(args.runs_out, "runs_out");
    check_probabilities(&ps)?;
    check_positive("trials", trials)?;
    check_positive("target_edges", target_edges)?;
    strategies.sort_by_key(|s| s.to_string());
    strategies.dedup();
    ps.sort_by(f64::total_cmp);
    ps.dedup();

    let limits = RunLimits::default();
    let config = McConfig { runs: trials, target_edges, seed: r.seed, limits };
    let mut rows = Vec::new();
    let mut records: Vec<(f64, RunRecord)> = Vec::new();
    for &strategy in &strategies {
        for &p in &ps {
            let analytic = tidy(match strategy {
                Strategy::S1 => analytic_costs(p).c_s1,
                Strategy::S2 => analytic_costs(p).c_s2,
            });
            let mut growth_z = None;
            if analytic.is_none() {
                let mut model = EoModel::new(p, r.seed)?;
                let slope = estimate_growth(strategy, &mut model, SLOPE_ATTACH_BUDGET, SLOPE_BATCHES, &limits)?;
                growth_z = Some(slope.z_score());
                if !slope.grows(SLOPE_SIGMAS) {
                    rows.push(SweepRow {
                        strategy,
                        p,
                        runs: 0,
                        target_edges,
                        analytic_cost: None,
                        mc_cost: None,
                        std_error: None,
                        relative_error: None,
                        attempts: 0,
                        net_edges: 0,
                        cycles: 0,
                        growth_z,
                        non_growing: true,
                    });
                    continue;
                }
            }
            let (summary, run_records) = monte_carlo(strategy, p, &config)?;
            records.extend(run_records.into_iter().map(|rec| (p, rec)));
            let relative_error = summary.cost_per_edge.zip(analytic).map(|(mc, a)| (mc - a) / a);
            rows.push(SweepRow {
                strategy,
                p,
                runs: summary.runs,
                target_edges,
                analytic_cost: analytic,
                mc_cost: summary.cost_per_edge,
                std_error: summary.std_error,
                relative_error,
                attempts: summary.attempts,
                net_edges: summary.net_edges,
                cycles: summary.cycles,
                growth_z,
                non_growing: summary.non_growing,
            });
        }
    }

    if let Some(path) = runs_out {
        records.sort_by(|(pa, a), (pb, b)| {
            (a.strategy.to_string(), pa).partial_cmp(&(b.strategy.to_string(), pb)).unwrap().then(a.seed.cmp(&b.seed))
        });
        let mut csv = Csv::new(&["strategy", "p", "seed", "attempts", "net_edges", "cost_per_edge"]);
        for (p, rec) in &records {
            csv.row([
                rec.strategy.to_string(),
                p.to_string(),
                rec.seed.to_string(),
                rec.attempts.to_string(),
                rec.net_edges.to_string(),
                opt(rec.cost_per_edge(), ""),
            ]);
        }
        emit(Some(&path), &csv.finish())?;
    }

    let text = match r.format {
        Format::Json => json(&SweepReport { seed: r.seed, rows }),
        Format::Csv => {
            let mut csv = Csv::new(&[
                "strategy",
                "p",
                "runs",
                "target_edges",
                "analytic_cost",
                "mc_cost",
                "std_error",
                "relative_error",
                "attempts",
                "net_edges",
                "cycles",
                "growth_z",
                "non_growing",
            ]);
            for row in &rows {
                csv.row([
                    row.strategy.to_string(),
                    row.p.to_string(),
                    row.runs.to_string(),
                    row.target_edges.to_string(),
                    opt(row.analytic_cost, "undefined"),
                    opt(row.mc_cost, ""),
                    opt(row.std_error, ""),
                    opt(row.relative_error, ""),
                    row.attempts.to_string(),
                    row.net_edges.to_string(),
                    row.cycles.to_string(),
                    opt(row.growth_z, ""),
                    row.non_growing.to_string(),
                ]);
            }
            csv.finish()
        }
    };
    emit(r.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct VerifyReport {
    rule: &'static str,
    pass: bool,
    #[serde(flatten)]
    summary: SweepSummary,
}

pub fn verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let r = resolve_common(args.common)?;
    let max_qubits = r.config.pick(args.max_qubits, "max_qubits", 10)?;
    let samples = r.config.pick(args.samples, "samples", 500)?;
    if !(2..=DEFAULT_QUBIT_CAP).contains(&max_qubits) {
        return Err(spec_error(format!("max-qubits must lie in 2..={DEFAULT_QUBIT_CAP}, got {max_qubits}")));
    }
    let (rule, name) = if args.negative_control {
        (neighbourhood_union_rule as graphforge::oracle::FusionRule, "neighbourhood-union")
    } else {
        (symmetric_difference_rule as graphforge::oracle::FusionRule, "symmetric-difference")
    };
    let summary = sweep_verify_with_rule(max_qubits, samples, r.seed, DEFAULT_QUBIT_CAP, rule)
        .context("verification could not run")?;
    let pass = summary.pass();
    for f in summary.failures.iter().take(20) {
        eprintln!("FAIL u={} v={} graph=[{}]: {}", f.u, f.v, f.graph.replace('\n', "; "), f.problems.join("; "));
    }
    if summary.failures.len() > 20 {
        eprintln!("... {} failing cases in total", summary.failures.len());
    }
    emit(r.out.as_deref(), &json(&VerifyReport { rule: name, pass, summary }))?;
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[derive(Serialize)]
struct NetworkRow {
    network: u64,
    seed: u64,
    phase1_attempts: u64,
    phase2_attempts: u64,
    phase1_edges: usize,
    junctions_attempted: u64,
    junctions_formed: u64,
    second_gen_attempted: u64,
    second_gen_formed: u64,
    final_edges: u64,
    phase1_cost_per_edge: Option<f64>,
    cost_per_edge: Option<f64>,
    rows_in_largest: usize,
    components: usize,
    non_growing: bool,
}

#[derive(Serialize)]
struct AssemblySummary {
    junctions_attempted: u64,
    junctions_formed: u64,
    junction_yield: Option<f64>,
    junction_yield_std_error: Option<f64>,
    mean_phase1_cost_per_edge: Option<f64>,
    mean_cost_per_edge: Option<f64>,
    cost_std_error: Option<f64>,
}

#[derive(Serialize)]
struct AssemblyReport {
    strategy: Strategy,
    p: f64,
    seed: u64,
    rows: usize,
    backbone_len: usize,
    pairing: RowPairing,
    second_gen: bool,
    networks: Vec<NetworkRow>,
    summary: AssemblySummary,
}

fn mean_and_error(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let se = (xs.len() > 1).then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt());
    (Some(mean), se)
}

pub fn assemble(args: AssembleArgs) -> anyhow::Result<ExitCode> {
    let r = resolve_common(args.common)?;
    let c = &r.config;
    let strategy = c.pick(args.strategy, "strategy", Strategy::S2)?;
    let p = c.pick(args.p, "p", 0.4)?;
    let networks = c.pick(args.trials, "trials", 20)?;
    let rows = c.pick(args.rows, "rows", 10)?;
    let backbone_len = c.pick(args.backbone_len, "backbone_len", 50)?;
    let pairing = c.pick(args.pairing, "pairing", RowPairing::Grid)?;
    let second_gen = c.pick(args.second_gen, "second_gen", false)?;
    let dump_graph = c.pick_optional_path(args.dump_graph, "dump_graph");
    check_probabilities(&[p])?;
    check_positive("trials", networks)?;
    if rows < 2 || backbone_len < 2 {
        return Err(spec_error("rows and backbone-len must both be at least 2"));
    }
    let options = AssemblyOptions { pairing, second_gen };
    let limits = RunLimits::default();

    let mut out_rows = Vec::new();
    for k in 0..networks {
        let seed = run_seed(r.seed, k);
        let mut model = EoModel::new(p, seed)?;
        let pipe = run_pipeline(&mut model, strategy, rows, backbone_len, &options, &limits)?;
        if k == 0 {
            if let Some(path) = &dump_graph {
                emit(Some(path), &pipe.graph.to_edge_list())?;
            }
        }
        out_rows.push(NetworkRow {
            network: k,
            seed,
            phase1_attempts: pipe.stats.phase1_attempts,
            phase2_attempts: pipe.stats.phase2_attempts,
            phase1_edges: pipe.phase1_edges,
            junctions_attempted: pipe.stats.junctions_attempted,
            junctions_formed: pipe.stats.junctions_formed,
            second_gen_attempted: pipe.stats.second_gen_attempted,
            second_gen_formed: pipe.stats.second_gen_formed,
            final_edges: pipe.stats.final_edges,
            phase1_cost_per_edge: pipe.phase1_cost_per_edge(),
            cost_per_edge: pipe.stats.total_cost_per_edge,
            rows_in_largest: pipe.connectivity.rows_in_largest,
            components: pipe.connectivity.components,
            non_growing: pipe.non_growing,
        });
    }

    let attempted: u64 = out_rows.iter().map(|n| n.junctions_attempted).sum();
    let formed: u64 = out_rows.iter().map(|n| n.junctions_formed).sum();
    let junction_yield = (attempted > 0).then(|| formed as f64 / attempted as f64);
    let costs: Vec<f64> = out_rows.iter().filter_map(|n| n.cost_per_edge).collect();
    let phase1: Vec<f64> = out_rows.iter().filter_map(|n| n.phase1_cost_per_edge).collect();
    let (mean_cost, cost_se) = mean_and_error(&costs);
    let summary = AssemblySummary {
        junctions_attempted: attempted,
        junctions_formed: formed,
        junction_yield,
        junction_yield_std_error: junction_yield.map(|y| (y * (1.0 - y) / attempted as f64).sqrt()),
        mean_phase1_cost_per_edge: mean_and_error(&phase1).0,
        mean_cost_per_edge: mean_cost,
        cost_std_error: cost_se,
    };

    let text = match r.format {
        Format::Json => json(&AssemblyReport {
            strategy,
            p,
            seed: r.seed,
            rows,
            backbone_len,
            pairing,
            second_gen,
            networks: out_rows,
            summary,
        }),
        Format::Csv => {
            let mut csv = Csv::new(&[
                "network",
                "seed",
                "phase1_attempts",
                "phase2_attempts",
                "phase1_edges",
                "junctions_attempted",
                "junctions_formed",
                "second_gen_attempted",
                "second_gen_formed",
                "final_edges",
                "phase1_cost_per_edge",
                "cost_per_edge",
                "rows_in_largest",
                "components",
                "non_growing",
            ]);
            for n in &out_rows {
                csv.row([
                    n.network.to_string(),
                    n.seed.to_string(),
                    n.phase1_attempts.to_string(),
                    n.phase2_attempts.to_string(),
                    n.phase1_edges.to_string(),
                    n.junctions_attempted.to_string(),
                    n.junctions_formed.to_string(),
                    n.second_gen_attempted.to_string(),
                    n.second_gen_formed.to_string(),
                    n.final_edges.to_string(),
                    opt(n.phase1_cost_per_edge, ""),
                    opt(n.cost_per_edge, ""),
                    n.rows_in_largest.to_string(),
                    n.components.to_string(),
                    n.non_growing.to_string(),
                ]);
            }
            csv.finish()
        }
    };
    emit(r.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct TableRow {
    p: f64,
    c_s2: Option<f64>,
    c_s1: Option<f64>,
    c3_bk: Option<f64>,
    bk_recycled: Option<f64>,
}

#[derive(Serialize)]
struct TableReport {
    rows: Vec<TableRow>,
}

pub fn table(args: TableArgs) -> anyhow::Result<ExitCode> {
    let r = resolve_common(args.common)?;
    let ps = r.config.pick_list(args.p, "p", &TABLE_P)?;
    check_probabilities(&ps)?;
    let rows: Vec<TableRow> = ps
        .iter()
        .map(|&p| {
            let a = analytic_costs(p);
            TableRow {
                p,
                c_s2: tidy(a.c_s2),
                c_s1: tidy(a.c_s1),
                c3_bk: tidy(a.c3_bk),
                bk_recycled: tidy(a.c3_bk_recycled_ref),
            }
        })
        .collect();
    let text = match r.format {
        Format::Json => json(&TableReport { rows }),
        Format::Csv => {
            let mut csv = Csv::new(&["p", "c_s2", "c_s1", "c3_bk", "bk_recycled"]);
            for row in &rows {
                csv.row([
                    row.p.to_string(),
                    opt(row.c_s2, "undefined"),
                    opt(row.c_s1, "undefined"),
                    opt(row.c3_bk, "undefined"),
                    opt(row.bk_recycled, "undefined"),
                ]);
            }
            csv.finish()
        }
    };
    emit(r.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}
