//! `graphforge`: strategy cost sweeps, fusion-rule verification, network
//! assembly experiments and the reference cost table.
//!
//! Exit status is 0 on success, 1 when verification finds a failing case and
//! 2 for an invalid run specification or an unwritable output.

mod commands;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use graphforge::assembly::RowPairing;
use graphforge::Strategy;

use settings::Format;

#[derive(Parser, Debug)]
#[command(name = "graphforge", version, about = "Graph-state growth experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo cost per edge next to the closed form, per strategy and p.
    Sweep(SweepArgs),
    /// Check the graph-level fusion rule against exact state vectors.
    Verify(VerifyArgs),
    /// Grow rows of chains and fuse their leaves into a network.
    Assemble(AssembleArgs),
    /// Closed-form comparison table.
    Table(TableArgs),
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// `key = value` file mirroring the long flags; flags and environment win.
    #[arg(long, env = "GRAPHFORGE_CONFIG")]
    pub config: Option<PathBuf>,
    /// Master seed [default: 1729].
    #[arg(long, env = "GRAPHFORGE_SEED")]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, env = "GRAPHFORGE_OUT")]
    pub out: Option<PathBuf>,
    /// Output format [default: csv; verify always writes json].
    #[arg(long, value_enum, env = "GRAPHFORGE_FORMAT")]
    pub format: Option<Format>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Strategies to run, repeatable [default: s1,s2].
    #[arg(long, value_delimiter = ',', env = "GRAPHFORGE_STRATEGY")]
    pub strategy: Vec<Strategy>,
    /// Fusion success probabilities, repeatable [default: 0.25,0.3,...,0.5].
    #[arg(long = "p", value_delimiter = ',', env = "GRAPHFORGE_P", allow_negative_numbers = true)]
    pub p: Vec<f64>,
    /// Independent runs per (strategy, p) [default: 200].
    #[arg(long, env = "GRAPHFORGE_TRIALS")]
    pub trials: Option<u64>,
    /// Edges each run grows before stopping [default: 100].
    #[arg(long, env = "GRAPHFORGE_TARGET_EDGES")]
    pub target_edges: Option<u64>,
    /// Also write one CSV line per run to this file.
    #[arg(long, env = "GRAPHFORGE_RUNS_OUT")]
    pub runs_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Largest random graph in the sweep [default: 10, at most 14].
    #[arg(long, env = "GRAPHFORGE_MAX_QUBITS")]
    pub max_qubits: Option<usize>,
    /// Random graphs on top of the exhaustive small-graph set [default: 500].
    #[arg(long, env = "GRAPHFORGE_SAMPLES")]
    pub samples: Option<usize>,
    /// Verify the neighbourhood-union rule instead; must fail.
    #[arg(long, hide = true)]
    pub negative_control: bool,
}

#[derive(Args, Debug)]
pub struct AssembleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Growth strategy for the rows [default: s2].
    #[arg(long, env = "GRAPHFORGE_STRATEGY")]
    pub strategy: Option<Strategy>,
    /// Fusion success probability [default: 0.4].
    #[arg(long = "p", env = "GRAPHFORGE_P", allow_negative_numbers = true)]
    pub p: Option<f64>,
    /// Networks to build [default: 20].
    #[arg(long, env = "GRAPHFORGE_TRIALS")]
    pub trials: Option<u64>,
    /// Rows per network [default: 10].
    #[arg(long, env = "GRAPHFORGE_ROWS")]
    pub rows: Option<usize>,
    /// Backbone vertices per row [default: 50].
    #[arg(long, env = "GRAPHFORGE_BACKBONE_LEN")]
    pub backbone_len: Option<usize>,
    /// Which rows get linked: grid, ring or all-pairs [default: grid].
    #[arg(long, env = "GRAPHFORGE_PAIRING")]
    pub pairing: Option<RowPairing>,
    /// Fuse pairs of junction leaves after the first pass.
    #[arg(long, env = "GRAPHFORGE_SECOND_GEN", num_args = 0..=1, default_missing_value = "true")]
    pub second_gen: Option<bool>,
    /// Write the first network as an edge list.
    #[arg(long, env = "GRAPHFORGE_DUMP_GRAPH")]
    pub dump_graph: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    #[command(flatten)]
    pub common: Common,
    /// Probabilities to tabulate [default: 0.5,0.4].
    #[arg(long = "p", value_delimiter = ',', env = "GRAPHFORGE_P", allow_negative_numbers = true)]
    pub p: Vec<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(args) => commands::sweep(args),
        Command::Verify(args) => commands::verify(args),
        Command::Assemble(args) => commands::assemble(args),
        Command::Table(args) => commands::table(args),
    };
    match result {
        Ok(status) => status,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
