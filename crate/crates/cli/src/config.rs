//! Per-subcommand JSON config schemas.
//!
//! Each run is driven by one file; the single `seed` field is the master
//! seed every module stream derives from. Missing optional fields take
//! the library defaults.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use statarb_core::backtest::Sizing;
use statarb_core::oumodel::OuParams;
use statarb_core::rlagent::{OuEnvConfig, RlConfig};
use statarb_core::spreadsearch::SearchConfig;
use statarb_core::strategies::{BGrid, CloseRule};

use crate::iofmt::{hash_config, Provenance};

/// Read, hash, and parse a config file.
pub fn load<T: serde::de::DeserializeOwned + HasSeed>(path: &Path) -> Result<(T, Provenance)> {
    let bytes = fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
    let config: T = serde_json::from_slice(&bytes)
        .with_context(|| format!("parsing config {}", path.display()))?;
    let prov = Provenance { config_hash: hash_config(&bytes), seed: config.seed() };
    Ok((config, prov))
}

/// Every config carries the one master seed (0 for pure transforms).
pub trait HasSeed {
    fn seed(&self) -> u64;
}

macro_rules! has_seed {
    ($($ty:ty),*) => {
        $(impl HasSeed for $ty {
            fn seed(&self) -> u64 {
                self.seed
            }
        })*
    };
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// One ticker CSV on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TickerInput {
    pub ticker: String,
    pub path: PathBuf,
}

/// Formation/trading boundary: by row fraction or by first trading date.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Split {
    Fraction { fraction: f64 },
    Date { date: String },
}

#[derive(Debug, Clone, Deserialize)]
pub struct SimulateOuConfig {
    pub params: OuParams,
    pub x0: f64,
    pub horizon: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
pub struct EmrtCliConfig {
    pub input: PathBuf,
    #[serde(default = "default_c")]
    pub c_threshold: f64,
    /// Override for the reference mean; sample mean when absent.
    pub reference_mean: Option<f64>,
    #[serde(default)]
    pub maxima_only: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_c() -> f64 {
    2.0
}

#[derive(Debug, Clone, Deserialize)]
pub struct Table1Config {
    #[serde(default = "default_mus")]
    pub mus: Vec<f64>,
    #[serde(default = "default_paths_per_mu")]
    pub paths_per_mu: usize,
    #[serde(default = "default_c")]
    pub c_threshold: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_mus() -> Vec<f64> {
    (1..=10).map(|k| 2.0 * k as f64).collect()
}

fn default_paths_per_mu() -> usize {
    100
}

fn default_sigma() -> f64 {
    1.0
}

fn default_horizon() -> f64 {
    1.0
}

fn default_n_steps() -> usize {
    1000
}

#[derive(Debug, Clone, Deserialize)]
pub struct FitSpreadConfig {
    pub inputs: Vec<TickerInput>,
    #[serde(default)]
    pub search: SearchConfig,
    /// When set, coefficients are fitted on the formation window and the
    /// emitted spread covers the trading window, out of sample.
    pub split: Option<Split>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TrainConfig {
    #[serde(default)]
    pub env: OuEnvConfig,
    #[serde(default)]
    pub rl: RlConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
pub struct EvaluateConfig {
    pub qtable_csv: PathBuf,
    pub qtable_sidecar: PathBuf,
    pub spread_csv: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchMethod {
    Dm,
    Ou,
}

#[derive(Debug, Clone, Deserialize)]
pub struct BenchmarkConfig {
    pub method: BenchMethod,
    /// Exactly two legs: the spread is S1 − B·S2 (B = 1 for DM).
    pub inputs: Vec<TickerInput>,
    pub split: Split,
    /// Band multiplier; defaults to 1 for DM, 0.5 for OU.
    pub k: Option<f64>,
    #[serde(default = "default_close_rule")]
    pub close_rule: CloseRule,
    #[serde(default)]
    pub b_grid: BGrid,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_close_rule() -> CloseRule {
    CloseRule::Band
}

#[derive(Debug, Clone, Deserialize)]
pub struct LegsSpec {
    pub inputs: Vec<TickerInput>,
    pub coefficients: Vec<f64>,
    /// Trading-window selector matching the spread CSV, when it was
    /// produced out of sample.
    pub split: Option<Split>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct BacktestCliConfig {
    pub spread_csv: PathBuf,
    pub trades_csv: PathBuf,
    /// Legs for entry-basis sizing; absent means the spread itself is the
    /// traded instrument (simulated spreads).
    pub legs: Option<LegsSpec>,
    #[serde(default = "default_initial_wealth")]
    pub initial_wealth: f64,
    #[serde(default = "default_sizing")]
    pub sizing: Sizing,
    #[serde(default)]
    pub transaction_cost: f64,
    #[serde(default)]
    pub interest_rate: f64,
    /// Label recorded in the report; defaults to the trades file stem.
    pub source: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_initial_wealth() -> f64 {
    100.0
}

fn default_sizing() -> Sizing {
    Sizing::GrossExposure
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReportConfig {
    /// report.json files from backtest runs.
    pub reports: Vec<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

has_seed!(
    SimulateOuConfig,
    EmrtCliConfig,
    Table1Config,
    FitSpreadConfig,
    TrainConfig,
    EvaluateConfig,
    BenchmarkConfig,
    BacktestCliConfig,
    ReportConfig
);
