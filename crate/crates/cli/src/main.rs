//! `rbpebble`: generate graphs, evaluate labelings, simulate evaluation
//! strategies, extend pebblings and run the desk-scale checks.
//!
//! Every report is one line of JSON on stdout (or in `--out`); `--pretty`
//! prints a table instead. Exit codes: 0 success, 1 a checked inequality
//! failed, 2 bad usage or parameters, 3 unreadable or malformed files.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rbpebble::graph::Family;
use rbpebble::pebble::{Cost, DEFAULT_ORACLE_NODES};
use rbpebble::strategy::Strategy;

use crate::output::CliError;

#[derive(Parser)]
#[command(name = "rbpebble", version, about = "Red-blue pebbling and bandwidth-hard function simulator")]
struct Cli {
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print a human-readable table instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph file.
    Gen(GenArgs),
    /// Evaluate the labeling of a graph under a seeded permutation.
    Eval(EvalArgs),
    /// Run an honest strategy and report its energy cost and CMC.
    Simulate(SimulateArgs),
    /// Extend a black pebbling to a red-blue pebbling and check its bounds.
    Extend(ExtendArgs),
    /// Exact minimum red-blue pebbling cost of a small graph.
    Rbcost(RbcostArgs),
    /// Monte Carlo estimate of the label collision rate.
    Collide(CollideArgs),
    /// Build a hint for one interval and run the predictor.
    Predict(PredictArgs),
    /// Check the energy lower bound on a small graph.
    CheckTheorem1(TheoremArgs),
    /// Depth and exhaustive depth-robustness of a graph.
    Depth(DepthArgs),
    /// Monte Carlo estimate of the hintless guessing probability.
    Guess(GuessArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(long)]
    nodes: usize,
    #[arg(long, default_value_t = 2)]
    delta: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Cost parameters, as integers or fractions such as `3/2`.
#[derive(Args)]
struct CostArgs {
    #[arg(long = "cb", value_parser = parse_cost, default_value = "1")]
    c_b: Cost,
    #[arg(long = "cr", value_parser = parse_cost, default_value = "1")]
    c_r: Cost,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 16)]
    width: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Source inputs as comma-separated hex words; drawn from the seed if absent.
    #[arg(long)]
    input: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 16)]
    width: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cache size in words.
    #[arg(long)]
    cache: usize,
    #[command(flatten)]
    costs: CostArgs,
    #[arg(long, value_parser = parse_strategy, default_value = "greedy_keep_hot")]
    strategy: Strategy,
    /// Also write the execution trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ExtendArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Black pebbling as JSON lines; one node per round in topological
    /// order if absent.
    #[arg(long)]
    pebbling: Option<PathBuf>,
    #[arg(long)]
    m: usize,
    /// Defaults to the graph's indegree bound.
    #[arg(long)]
    delta: Option<usize>,
    #[command(flatten)]
    costs: CostArgs,
    /// Override the partition threshold `(10δ - 1)m`.
    #[arg(long)]
    threshold: Option<usize>,
    /// Also write the red-blue pebbling as JSON lines.
    #[arg(long)]
    redblue: Option<PathBuf>,
}

#[derive(Args)]
struct RbcostArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Red pebble budget.
    #[arg(long)]
    m: usize,
    #[command(flatten)]
    costs: CostArgs,
    #[arg(long, env = "RBPEBBLE_MAX_ORACLE_NODES", default_value_t = DEFAULT_ORACLE_NODES)]
    max_oracle_nodes: usize,
}

#[derive(Args)]
struct CollideArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 16)]
    width: u32,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 16)]
    width: u32,
    /// Cache size of the honest run, in words.
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the partition threshold `(10δ - 1)m`.
    #[arg(long)]
    threshold: Option<usize>,
    /// Interval to predict; the first one with critical nodes if absent.
    #[arg(long)]
    interval: Option<usize>,
}

#[derive(Args)]
struct TheoremArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 16)]
    width: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cache size in words.
    #[arg(long)]
    m: usize,
    /// Defaults to the graph's indegree bound.
    #[arg(long)]
    delta: Option<usize>,
    #[command(flatten)]
    costs: CostArgs,
    #[arg(long, env = "RBPEBBLE_MAX_ORACLE_NODES", default_value_t = DEFAULT_ORACLE_NODES)]
    max_oracle_nodes: usize,
}

#[derive(Args)]
struct DepthArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Nodes removed in the robustness check; needs `-d`.
    #[arg(short, long, requires = "d")]
    e: Option<usize>,
    /// Required remaining depth; needs `-e`.
    #[arg(short, long, requires = "e")]
    d: Option<usize>,
}

#[derive(Args)]
struct GuessArgs {
    #[arg(long, default_value_t = 2)]
    width: u32,
    /// Points revealed to the guesser before it guesses.
    #[arg(long, default_value_t = 0)]
    q: usize,
    /// Points to guess.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: rbpebble::Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: rbpebble::Error| e.to_string())
}

fn parse_cost(s: &str) -> Result<Cost, String> {
    let c: Cost = s.trim().parse().map_err(|e| format!("bad cost `{s}`: {e}"))?;
    if c < Cost::from_integer(0) {
        return Err(format!("cost `{s}` is negative"));
    }
    Ok(c)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let report = match cli.command {
        Command::Gen(a) => commands::gen(a.family, a.nodes, a.delta, a.seed)?,
        Command::Eval(a) => commands::eval(&a.graph, a.width, a.seed, a.input.as_deref())?,
        Command::Simulate(a) => commands::simulate(
            &a.graph,
            a.width,
            a.seed,
            a.cache,
            a.costs.c_b,
            a.costs.c_r,
            a.strategy,
            a.trace.as_deref(),
        )?,
        Command::Extend(a) => commands::extend(
            &a.graph,
            a.pebbling.as_deref(),
            a.m,
            a.delta,
            a.costs.c_b,
            a.costs.c_r,
            a.threshold,
            a.redblue.as_deref(),
        )?,
        Command::Rbcost(a) => commands::rbcost(&a.graph, a.m, a.costs.c_b, a.costs.c_r, a.max_oracle_nodes)?,
        Command::Collide(a) => commands::collide(&a.graph, a.width, a.trials, a.seed)?,
        Command::Predict(a) => commands::predict(&a.graph, a.width, a.m, a.seed, a.threshold, a.interval)?,
        Command::CheckTheorem1(a) => commands::check_theorem1(
            &a.graph,
            a.width,
            a.seed,
            a.m,
            a.delta,
            a.costs.c_b,
            a.costs.c_r,
            a.max_oracle_nodes,
        )?,
        Command::Depth(a) => commands::depth(&a.graph, a.e.zip(a.d))?,
        Command::Guess(a) => commands::guess(a.width, a.q, a.k, a.trials, a.seed)?,
    };
    output::emit(&report, cli.out.as_deref(), cli.pretty)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rbpebble: {e}");
            ExitCode::from(e.code())
        }
    }
}
