//! Browser bindings for the interactive demo page.
//!
//! Each export takes plain numbers and returns a JSON string; failures
//! come back as `{"error": "..."}` so the page never traps on a panic
//! boundary. All three operations are deterministic in the seed.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use statarb_core::backtest::{run_backtest_with_basis, BacktestConfig, Metrics};
use statarb_core::emrt::{
    build_tau_sequence, emrt_of_taus, find_important_extremes, EmrtConfig, ExtremeKind,
    ReferenceMean, TauKind,
};
use statarb_core::oumodel::{simulate_ou_path, OuParams, SimConfig};
use statarb_core::rlagent::{evaluate, rollout, train, OuEnv, OuEnvConfig, QTable, RlConfig};
use statarb_core::seeding::{stream, StreamKind};

fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string(value).unwrap_or_else(|e| format!(r#"{{"error":"{e}"}}"#))
}

fn err_json(message: impl std::fmt::Display) -> String {
    to_json(&serde_json::json!({ "error": message.to_string() }))
}

#[derive(Serialize)]
struct MarkedPoint {
    index: usize,
    value: f64,
    kind: String,
}

#[derive(Serialize)]
struct PathPayload {
    series: Vec<f64>,
    extremes: Vec<MarkedPoint>,
    taus: Vec<MarkedPoint>,
    emrt: Option<f64>,
    reference_mean: f64,
}

/// Simulate one OU path and annotate it with its important extremes,
/// τ-sequence, and EMRT.
#[wasm_bindgen]
pub fn emrt_path_json(mu: f64, theta: f64, sigma: f64, c: f64, n_steps: u32, seed: u32) -> String {
    let sim = SimConfig {
        params: OuParams { mu, theta, sigma },
        x0: theta,
        horizon: 1.0,
        n_steps: n_steps as usize,
        seed: seed as u64,
    };
    let series = match simulate_ou_path(&sim, 0) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };

    let extremes = match find_important_extremes(&series, c) {
        Ok(list) => list
            .into_iter()
            .map(|e| MarkedPoint {
                index: e.index,
                value: e.value,
                kind: match e.kind {
                    ExtremeKind::Minimum => "min".into(),
                    ExtremeKind::Maximum => "max".into(),
                },
            })
            .collect(),
        Err(e) => return err_json(e),
    };

    let config = EmrtConfig { c_threshold: c, ..Default::default() };
    let (taus, emrt, reference_mean) = match build_tau_sequence(&series, &config) {
        Ok(taus) => {
            let marked = taus
                .taus
                .iter()
                .zip(&taus.kinds)
                .map(|(&t, k)| MarkedPoint {
                    index: t,
                    value: series.values[t],
                    kind: match k {
                        TauKind::Extreme => "extreme".into(),
                        TauKind::Crossing => "crossing".into(),
                    },
                })
                .collect();
            let emrt = emrt_of_taus(&taus).ok();
            (marked, emrt, taus.reference_mean)
        }
        Err(_) => (Vec::new(), None, series.mean()),
    };

    to_json(&PathPayload { series: series.values, extremes, taus, emrt, reference_mean })
}

#[derive(Serialize)]
struct SweepRow {
    mu: f64,
    mean_emrt: f64,
    paths_used: usize,
}

/// Average EMRT per mu over seeded OU ensembles (theta = 0, sigma = 1,
/// T = 1): the decreasing reversion-time curve.
#[wasm_bindgen]
pub fn mu_sweep_json(
    mu_min: f64,
    mu_max: f64,
    mu_step: f64,
    paths_per_mu: u32,
    c: f64,
    n_steps: u32,
    seed: u32,
) -> String {
    if !(mu_step > 0.0) || !(mu_max >= mu_min) || !(mu_min > 0.0) {
        return err_json("need 0 < mu_min <= mu_max and mu_step > 0");
    }
    let config = EmrtConfig { c_threshold: c, reference_mean: ReferenceMean::SampleMean, ..Default::default() };
    let mut rows = Vec::new();
    let count = ((mu_max - mu_min) / mu_step).round() as usize;
    for k in 0..=count {
        let mu = mu_min + k as f64 * mu_step;
        let sim = SimConfig {
            params: OuParams { mu, theta: 0.0, sigma: 1.0 },
            x0: 0.0,
            horizon: 1.0,
            n_steps: n_steps as usize,
            seed: seed as u64,
        };
        let mut total = 0.0;
        let mut used = 0usize;
        for i in 0..paths_per_mu {
            let path = match simulate_ou_path(&sim, i as u64) {
                Ok(p) => p,
                Err(e) => return err_json(e),
            };
            if let Ok(r) = statarb_core::emrt::compute_emrt(&path, &config) {
                total += r;
                used += 1;
            }
        }
        if used > 0 {
            rows.push(SweepRow { mu, mean_emrt: total / used as f64, paths_used: used });
        }
    }
    to_json(&rows)
}

#[derive(Serialize)]
struct TradeMark {
    index: usize,
    action: i8,
    value: f64,
}

#[derive(Serialize)]
struct RlPayload {
    spread: Vec<f64>,
    trades: Vec<TradeMark>,
    wealth: Vec<f64>,
    metrics: Metrics,
    baseline_wealth: Vec<f64>,
    baseline_cumul_pnl_pct: f64,
    theta: f64,
}

/// Train a Q-learning agent on simulated OU spreads (mu = 1, theta = 1,
/// sigma = 0.1, one year of daily steps), roll it out greedily on a fresh
/// path, and backtest it against a random-legal-action baseline.
#[wasm_bindgen]
pub fn rl_demo_json(n_train_paths: u32, episodes: u32, seed: u32) -> String {
    let env = match OuEnv::new(OuEnvConfig {
        n_paths: n_train_paths as usize,
        seed: seed as u64,
        ..Default::default()
    }) {
        Ok(env) => env,
        Err(e) => return err_json(e),
    };
    let rl = RlConfig { episodes: episodes as usize, seed: seed as u64, ..Default::default() };
    let table = match train(&env, &rl) {
        Ok(t) => t,
        Err(e) => return err_json(e),
    };

    // fresh test path from a shifted ensemble seed
    let test_env = match OuEnv::new(OuEnvConfig {
        n_paths: 1,
        seed: seed as u64 ^ 0x5eed_0ff5,
        ..Default::default()
    }) {
        Ok(env) => env,
        Err(e) => return err_json(e),
    };
    let (spread, theta) = test_env.path(0);

    let trades = match evaluate(&table, &spread, &rl) {
        Ok(t) => t,
        Err(e) => return err_json(e),
    };
    let config = BacktestConfig::default();
    let report = match run_backtest_with_basis(&spread, &spread, &trades, &config) {
        Ok(r) => r,
        Err(e) => return err_json(e),
    };

    let zero = QTable::new(rl.lookback);
    let mut baseline_rng = stream(seed as u64, StreamKind::Baseline, 1);
    let baseline_trades = match rollout(&zero, &spread, &rl, 1.0, &mut baseline_rng) {
        Ok(t) => t,
        Err(e) => return err_json(e),
    };
    let baseline = match run_backtest_with_basis(&spread, &spread, &baseline_trades, &config) {
        Ok(r) => r,
        Err(e) => return err_json(e),
    };

    let marks = trades
        .events
        .iter()
        .map(|ev| TradeMark { index: ev.index, action: ev.action.signed(), value: spread.values[ev.index] })
        .collect();
    to_json(&RlPayload {
        spread: spread.values,
        trades: marks,
        wealth: report.wealth.values,
        metrics: report.metrics,
        baseline_wealth: baseline.wealth.values,
        baseline_cumul_pnl_pct: baseline.metrics.cumul_pnl_pct,
        theta,
    })
}
