//! Subcommand implementations: thin drivers over the library modules.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use statarb_core::backtest::{
    basis_series, run_backtest_with_basis, BacktestConfig, Metrics, Sizing,
};
use statarb_core::emrt::{
    build_tau_sequence, compute_emrt, emrt_of_taus, EmrtConfig, ExtremeKind, ExtremeSelection,
    ReferenceMean, TauKind,
};
use statarb_core::marketdata::{align, combine, load_price_csv, PricePanel, Series};
use statarb_core::oumodel::{simulate_ou_path, OuParams, SimConfig};
use statarb_core::rlagent::{self, load_qtable, OuEnv, OuEnvConfig, RlConfig};
use statarb_core::spreadsearch::search_coefficients;
use statarb_core::strategies::{dm_signals_with, ou_fit_pair, ou_signals};

use crate::config::{
    self, BacktestCliConfig, BenchMethod, BenchmarkConfig, EmrtCliConfig, EvaluateConfig,
    FitSpreadConfig, ReportConfig, SimulateOuConfig, Split, Table1Config, TickerInput, TrainConfig,
};
use crate::iofmt::{
    prepare_out_dir, read_series_csv, read_trades_csv, write_json, write_series_csv,
    write_trades_csv,
};

pub fn simulate_ou(config_path: &Path) -> Result<()> {
    let (config, prov) = config::load::<SimulateOuConfig>(config_path)?;
    let out_dir = prepare_out_dir(&config.out_dir)?;

    let sim = SimConfig {
        params: config.params,
        x0: config.x0,
        horizon: config.horizon,
        n_steps: config.n_steps,
        seed: config.seed,
    };
    let mut files = Vec::with_capacity(config.n_paths);
    for i in 0..config.n_paths {
        let series = simulate_ou_path(&sim, i as u64)?;
        let name = format!("path_{i:04}.csv");
        write_series_csv(
            &out_dir.join(&name),
            ("step", "value"),
            series.values.iter().enumerate().map(|(t, v)| (t.to_string(), *v)),
            &prov,
        )?;
        files.push(name);
    }

    #[derive(Serialize)]
    struct Manifest<'a> {
        config_hash: &'a str,
        seed: u64,
        params: OuParams,
        x0: f64,
        horizon: f64,
        n_steps: usize,
        n_paths: usize,
        files: Vec<String>,
    }
    write_json(
        &out_dir.join("manifest.json"),
        &Manifest {
            config_hash: &prov.config_hash,
            seed: config.seed,
            params: config.params,
            x0: config.x0,
            horizon: config.horizon,
            n_steps: config.n_steps,
            n_paths: config.n_paths,
            files,
        },
    )?;
    println!("wrote {} paths to {}", config.n_paths, out_dir.display());
    Ok(())
}

pub fn emrt(config_path: &Path) -> Result<()> {
    let (config, prov) = config::load::<EmrtCliConfig>(config_path)?;
    let out_dir = prepare_out_dir(&config.out_dir)?;

    let (_, values) = read_series_csv(&config.input)?;
    let series = Series::new(values);
    let emrt_config = EmrtConfig {
        c_threshold: config.c_threshold,
        reference_mean: config
            .reference_mean
            .map_or(ReferenceMean::SampleMean, ReferenceMean::Value),
        extremes: if config.maxima_only {
            ExtremeSelection::MaximaOnly
        } else {
            ExtremeSelection::Both
        },
    };

    let extremes = statarb_core::emrt::find_important_extremes(&series, config.c_threshold)?;
    let mut out = prov.comment();
    out.push_str("index,kind,value\n");
    for e in &extremes {
        let kind = match e.kind {
            ExtremeKind::Minimum => "min",
            ExtremeKind::Maximum => "max",
        };
        out.push_str(&format!("{},{kind},{}\n", e.index, e.value));
    }
    fs::write(out_dir.join("extremes.csv"), out)?;

    let taus = build_tau_sequence(&series, &emrt_config)?;
    let mut out = prov.comment();
    out.push_str("tau,kind\n");
    for (t, k) in taus.taus.iter().zip(&taus.kinds) {
        let kind = match k {
            TauKind::Extreme => "extreme",
            TauKind::Crossing => "crossing",
        };
        out.push_str(&format!("{t},{kind}\n"));
    }
    fs::write(out_dir.join("taus.csv"), out)?;

    let value = emrt_of_taus(&taus)?;
    let pairs = taus.taus.len() / 2;
    let mut out = prov.comment();
    out.push_str("emrt_steps,pairs,reference_mean\n");
    out.push_str(&format!("{value},{pairs},{}\n", taus.reference_mean));
    fs::write(out_dir.join("emrt.csv"), out)?;

    println!("EMRT {value} steps over {pairs} pairs (reference mean {})", taus.reference_mean);
    Ok(())
}

pub fn table1(config_path: &Path) -> Result<()> {
    let (config, prov) = config::load::<Table1Config>(config_path)?;
    let out_dir = prepare_out_dir(&config.out_dir)?;
    let emrt_config = EmrtConfig::with_c(config.c_threshold);

    let mut out = prov.comment();
    out.push_str("mu,mean_emrt,paths_used\n");
    for &mu in &config.mus {
        let sim = SimConfig {
            params: OuParams { mu, theta: config.theta, sigma: config.sigma },
            x0: config.theta,
            horizon: config.horizon,
            n_steps: config.n_steps,
            seed: config.seed,
        };
        let mut total = 0.0;
        let mut used = 0usize;
        for i in 0..config.paths_per_mu {
            let path = simulate_ou_path(&sim, i as u64)?;
            if let Ok(r) = compute_emrt(&path, &emrt_config) {
                total += r;
                used += 1;
            }
        }
        if used == 0 {
            bail!("no path produced an EMRT at mu = {mu}");
        }
        let mean = total / used as f64;
        out.push_str(&format!("{mu},{mean},{used}\n"));
        println!("mu = {mu}: mean EMRT {mean:.2} over {used} paths");
    }
    fs::write(out_dir.join("table1.csv"), out)?;
    Ok(())
}

/// Load and inner-join the ticker CSVs.
fn load_panel(inputs: &[TickerInput]) -> Result<(PricePanel, Vec<(String, usize)>)> {
    if inputs.is_empty() {
        bail!("no input tickers configured");
    }
    let mut series = Vec::with_capacity(inputs.len());
    for input in inputs {
        series.push(
            load_price_csv(&input.path, &input.ticker)
                .with_context(|| format!("loading {}", input.path.display()))?,
        );
    }
    let aligned = align(&series)?;
    for (ticker, dropped) in &aligned.dropped {
        if *dropped > 0 {
            eprintln!("align: dropped {dropped} dates of {ticker}");
        }
    }
    Ok((aligned.panel, aligned.dropped))
}

/// First index of the trading window.
fn split_index(panel: &PricePanel, split: &Split) -> Result<usize> {
    let n = panel.n_dates();
    let s = match split {
        Split::Fraction { fraction } => {
            if !(0.0 < *fraction && *fraction < 1.0) {
                bail!("split fraction must be in (0, 1), got {fraction}");
            }
            (n as f64 * fraction).floor() as usize
        }
        Split::Date { date } => {
            let date = NaiveDate::parse_from_str(date, "%Y-%m-%d")
                .with_context(|| format!("bad split date `{date}`"))?;
            panel.dates.iter().position(|d| *d >= date).unwrap_or(n)
        }
    };
    if s == 0 || s >= n {
        bail!("split leaves an empty formation or trading window ({s} of {n} rows)");
    }
    Ok(s)
}

fn slice_panel(panel: &PricePanel, range: std::ops::Range<usize>) -> PricePanel {
    PricePanel {
        dates: panel.dates[range.clone()].to_vec(),
        tickers: panel.tickers.clone(),
        prices: panel.prices[range].to_vec(),
    }
}

fn date_labels(panel: &PricePanel) -> Vec<String> {
    panel.dates.iter().map(|d| d.to_string()).collect()
}

pub fn fit_spread(config_path: &Path) -> Result<()> {
    let (config, prov) = config::load::<FitSpreadConfig>(config_path)?;
    let out_dir = prepare_out_dir(&config.out_dir)?;
    let (panel, dropped) = load_panel(&config.inputs)?;

    let (formation, trading) = match &config.split {
        Some(split) => {
            let s = split_index(&panel, split)?;
            (slice_panel(&panel, 0..s), Some(slice_panel(&panel, s..panel.n_dates())))
        }
        None => (panel.clone(), None),
    };

    let result = search_coefficients(&formation, &config.search)?;
    let formation_spread = &result.spread;
    let (emitted_panel, emitted_spread) = match &trading {
        Some(t) => {
            let spread = combine(t, &result.coefficients)?;
            (t, spread)
        }
        None => (&formation, formation_spread.clone()),
    };

    write_series_csv(
        &out_dir.join("spread.csv"),
        ("date", "value"),
        date_labels(emitted_panel).into_iter().zip(emitted_spread.values.iter().copied()),
        &prov,
    )?;

    #[derive(Serialize)]
    struct FormationStats {
        rows: usize,
        spread_mean: f64,
        spread_std: f64,
    }
    #[derive(Serialize)]
    struct SearchJson<'a> {
        config_hash: &'a str,
        seed: u64,
        tickers: &'a [String],
        coefficients: &'a [f64],
        emrt: f64,
        evaluated: u64,
        skipped: u64,
        dropped_dates: &'a [(String, usize)],
        formation: FormationStats,
        trading_rows: usize,
    }
    write_json(
        &out_dir.join("search.json"),
        &SearchJson {
            config_hash: &prov.config_hash,
            seed: config.seed,
            tickers: &panel.tickers,
            coefficients: &result.coefficients,
            emrt: result.emrt,
            evaluated: result.evaluated,
            skipped: result.skipped,
            dropped_dates: &dropped,
            formation: FormationStats {
                rows: formation.n_dates(),
                spread_mean: formation_spread.mean(),
                spread_std: formation_spread.sample_std(),
            },
            trading_rows: trading.as_ref().map_or(0, PricePanel::n_dates),
        },
    )?;

    println!(
        "coefficients {:?} with EMRT {:.3} ({} evaluated, {} skipped)",
        result.coefficients, result.emrt, result.evaluated, result.skipped
    );
    Ok(())
}

/// Sidecar layout: the flattened RlConfig (readable by the library
/// loader) plus run provenance and the training environment.
#[derive(Serialize, Deserialize)]
struct TrainSidecar {
    #[serde(flatten)]
    rl: RlConfig,
    config_hash: String,
    env: OuEnvConfig,
}

pub fn train(config_path: &Path) -> Result<()> {
    let (config, prov) = config::load::<TrainConfig>(config_path)?;
    let out_dir = prepare_out_dir(&config.out_dir)?;

    // the global seed is the only seed: module configs inherit it
    let env_config = OuEnvConfig { seed: config.seed, ..config.env };
    let rl_config = RlConfig { seed: config.seed, ..config.rl };

    let env = OuEnv::new(env_config)?;
    let table = rlagent::train(&env, &rl_config)?;

    let mut out = prov.comment();
    out.push_str("state,action,value,visits\n");
    let mut visited = 0usize;
    for (state, action, value, visits) in table.entries() {
        if visits > 0 {
            visited += 1;
        }
        out.push_str(&format!("{state},{},{value},{visits}\n", action.signed()));
    }
    fs::write(out_dir.join("qtable.csv"), out)?;

    write_json(
        &out_dir.join("qtable.json"),
        &TrainSidecar { rl: rl_config, config_hash: prov.config_hash.clone(), env: env_config },
    )?;

    println!(
        "trained {} episodes over {} paths; {visited} of {} (state, action) slots visited",
        rl_config.episodes,
        env.n_paths(),
        table.n_state_codes() * 3
    );
    Ok(())
}

pub fn evaluate(config_path: &Path) -> Result<()> {
    let (config, prov) = config::load::<EvaluateConfig>(config_path)?;
    let out_dir = prepare_out_dir(&config.out_dir)?;

    let (table, rl_config) = load_qtable(&config.qtable_csv, &config.qtable_sidecar)?;
    let (_, values) = read_series_csv(&config.spread_csv)?;
    let spread = Series::new(values);
    let trades = rlagent::evaluate(&table, &spread, &rl_config)?;
    write_trades_csv(&out_dir.join("trades.csv"), &trades, &prov)?;
    println!("{} trades over {} samples", trades.events.len(), spread.len());
    Ok(())
}

pub fn benchmark(config_path: &Path) -> Result<()> {
    let (config, prov) = config::load::<BenchmarkConfig>(config_path)?;
    let out_dir = prepare_out_dir(&config.out_dir)?;
    if config.inputs.len() != 2 {
        bail!("benchmark needs exactly two legs, got {}", config.inputs.len());
    }
    let (panel, _) = load_panel(&config.inputs)?;
    let s = split_index(&panel, &config.split)?;
    let formation = slice_panel(&panel, 0..s);
    let trading = slice_panel(&panel, s..panel.n_dates());

    #[derive(Serialize)]
    struct BenchmarkJson<'a> {
        config_hash: &'a str,
        seed: u64,
        method: BenchMethod,
        tickers: &'a [String],
        b: f64,
        k: f64,
        center: f64,
        width: f64,
        ou_params: Option<OuParams>,
        formation_rows: usize,
        trading_rows: usize,
        n_trades: usize,
    }

    let (trades, meta) = match config.method {
        BenchMethod::Dm => {
            let k = config.k.unwrap_or(1.0);
            let spread_formation = combine(&formation, &[1.0, -1.0])?;
            let mean = spread_formation.mean();
            let std = spread_formation.sample_std();
            let spread_trading = combine(&trading, &[1.0, -1.0])?;
            let trades = dm_signals_with(&spread_trading, mean, std, k, config.close_rule)?;
            write_series_csv(
                &out_dir.join("spread.csv"),
                ("date", "value"),
                date_labels(&trading).into_iter().zip(spread_trading.values.iter().copied()),
                &prov,
            )?;
            let meta = BenchmarkJson {
                config_hash: &prov.config_hash,
                seed: config.seed,
                method: config.method,
                tickers: &panel.tickers,
                b: 1.0,
                k,
                center: mean,
                width: k * std,
                ou_params: None,
                formation_rows: s,
                trading_rows: trading.n_dates(),
                n_trades: trades.events.len(),
            };
            (trades, meta)
        }
        BenchMethod::Ou => {
            let k = config.k.unwrap_or(0.5);
            let fit = ou_fit_pair(&formation.column(0), &formation.column(1), &config.b_grid)?;
            let spread_trading = combine(&trading, &[1.0, -fit.b])?;
            let trades = ou_signals(&spread_trading, &fit.params, k)?;
            write_series_csv(
                &out_dir.join("spread.csv"),
                ("date", "value"),
                date_labels(&trading).into_iter().zip(spread_trading.values.iter().copied()),
                &prov,
            )?;
            let width = k * fit.params.sigma / (2.0 * fit.params.mu).sqrt();
            let meta = BenchmarkJson {
                config_hash: &prov.config_hash,
                seed: config.seed,
                method: config.method,
                tickers: &panel.tickers,
                b: fit.b,
                k,
                center: fit.params.theta,
                width,
                ou_params: Some(fit.params),
                formation_rows: s,
                trading_rows: trading.n_dates(),
                n_trades: trades.events.len(),
            };
            (trades, meta)
        }
    };

    write_trades_csv(&out_dir.join("trades.csv"), &trades, &prov)?;
    write_json(&out_dir.join("benchmark.json"), &meta)?;
    println!(
        "{:?} benchmark: B = {}, {} trades over {} trading days",
        config.method,
        meta.b,
        trades.events.len(),
        meta.trading_rows
    );
    Ok(())
}

/// Backtest report on disk; also consumed by the `report` aggregator.
#[derive(Serialize, Deserialize)]
pub struct ReportJson {
    pub config_hash: String,
    pub seed: u64,
    pub source: String,
    pub sizing: Sizing,
    pub initial_wealth: f64,
    pub final_wealth: f64,
    pub metrics: Metrics,
}

pub fn backtest(config_path: &Path) -> Result<()> {
    let (config, prov) = config::load::<BacktestCliConfig>(config_path)?;
    let out_dir = prepare_out_dir(&config.out_dir)?;

    let (labels, values) = read_series_csv(&config.spread_csv)?;
    let spread = Series::new(values);
    let source = config.source.clone().unwrap_or_else(|| {
        config
            .trades_csv
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "trades".into())
    });
    let trades = read_trades_csv(&config.trades_csv, &source)?;

    let basis = match &config.legs {
        Some(legs) => {
            let (panel, _) = load_panel(&legs.inputs)?;
            let window = match &legs.split {
                Some(split) => {
                    let s = split_index(&panel, split)?;
                    slice_panel(&panel, s..panel.n_dates())
                }
                None => panel,
            };
            if window.n_dates() != spread.len() {
                bail!(
                    "legs window has {} rows but the spread has {}",
                    window.n_dates(),
                    spread.len()
                );
            }
            basis_series(&window, &legs.coefficients, config.sizing)?
        }
        None => spread.clone(),
    };

    let bt_config = BacktestConfig {
        initial_wealth: config.initial_wealth,
        sizing: config.sizing,
        transaction_cost: config.transaction_cost,
        interest_rate: config.interest_rate,
    };
    let report = run_backtest_with_basis(&spread, &basis, &trades, &bt_config)?;

    write_series_csv(
        &out_dir.join("wealth.csv"),
        ("label", "wealth"),
        labels.into_iter().zip(report.wealth.values.iter().copied()),
        &prov,
    )?;
    write_json(
        &out_dir.join("report.json"),
        &ReportJson {
            config_hash: prov.config_hash.clone(),
            seed: config.seed,
            source: report.source.clone(),
            sizing: report.sizing,
            initial_wealth: config.initial_wealth,
            final_wealth: *report.wealth.values.last().unwrap(),
            metrics: report.metrics,
        },
    )?;
    println!(
        "{}: CumulPnL {:.2}%, DailySR {:.4}, MaxDD {:.2}%",
        report.source,
        report.metrics.cumul_pnl_pct,
        report.metrics.daily_sharpe,
        report.metrics.max_drawdown_pct
    );
    Ok(())
}

pub fn report(config_path: &Path) -> Result<()> {
    let (config, prov) = config::load::<ReportConfig>(config_path)?;
    let out_dir = prepare_out_dir(&config.out_dir)?;

    let mut out = prov.comment();
    out.push_str("source,daily_ret_pct,daily_std_pct,daily_sharpe,max_dd_pct,cumul_pnl_pct\n");
    for path in &config.reports {
        let body = fs::read_to_string(path)
            .with_context(|| format!("reading report {}", path.display()))?;
        let r: ReportJson = serde_json::from_str(&body)
            .with_context(|| format!("parsing report {}", path.display()))?;
        let m = &r.metrics;
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.source,
            m.daily_ret_mean_pct,
            m.daily_ret_std_pct,
            m.daily_sharpe,
            m.max_drawdown_pct,
            m.cumul_pnl_pct
        ));
    }
    fs::write(out_dir.join("table.csv"), out)?;
    println!("aggregated {} reports", config.reports.len());
    Ok(())
}
