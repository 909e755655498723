//! `statarb`: config-driven pipeline runner.
//!
//! Every subcommand takes one JSON config file; all randomness derives
//! from the config's single seed, and every output file embeds the config
//! hash and seed, so runs are reproducible byte for byte.

mod commands;
mod config;
mod iofmt;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "statarb",
    version,
    about = "Mean-reversion statistical arbitrage: EMRT spreads, Q-learning trading, benchmark backtests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON config file driving this run
    #[arg(long, short)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate OU paths into per-path CSVs plus a manifest
    SimulateOu(ConfigArg),
    /// Important extremes, tau table, and EMRT of a series
    Emrt(ConfigArg),
    /// Sweep mu and report the average EMRT per value
    Table1(ConfigArg),
    /// Grid-search spread coefficients from ticker CSVs
    FitSpread(ConfigArg),
    /// Train the Q-learning agent on simulated OU spreads
    Train(ConfigArg),
    /// Greedy rollout of a trained table over a spread CSV
    Evaluate(ConfigArg),
    /// Run the DM or OU benchmark end-to-end from ticker CSVs
    Benchmark(ConfigArg),
    /// Wealth curve and metrics from a spread and a trade list
    Backtest(ConfigArg),
    /// Aggregate report JSONs into one metrics table CSV
    Report(ConfigArg),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SimulateOu(a) => commands::simulate_ou(&a.config),
        Command::Emrt(a) => commands::emrt(&a.config),
        Command::Table1(a) => commands::table1(&a.config),
        Command::FitSpread(a) => commands::fit_spread(&a.config),
        Command::Train(a) => commands::train(&a.config),
        Command::Evaluate(a) => commands::evaluate(&a.config),
        Command::Benchmark(a) => commands::benchmark(&a.config),
        Command::Backtest(a) => commands::backtest(&a.config),
        Command::Report(a) => commands::report(&a.config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let chain: Vec<String> = err.chain().skip(1).map(|c| c.to_string()).collect();
            let payload = serde_json::json!({ "error": err.to_string(), "context": chain });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}
