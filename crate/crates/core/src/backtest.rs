//! Wealth curves and performance metrics from trade lists.
//!
//! A trade list is an alternating buy/sell event stream on the spread. At
//! each buy the entire available cash buys units at the entry basis; the
//! position is marked to market daily and realized at the sell.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::marketdata::{sample_std, PricePanel, Series};

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("trade index {0} outside the spread series")]
    OutOfBoundsTrade(usize),
    #[error("entry basis {basis} at index {index} is not positive")]
    NonPositiveBasis { index: usize, basis: f64 },
    #[error("wealth series is degenerate (length < 2 or non-positive values)")]
    DegenerateWealth,
    #[error("invalid trade list: {0}")]
    InvalidTradeList(String),
    #[error("coefficient length {got} does not match asset count {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TradeAction {
    Buy,
    Sell,
}

impl TradeAction {
    /// Signed representation: buy = +1, sell = −1.
    pub fn signed(self) -> i8 {
        match self {
            TradeAction::Buy => 1,
            TradeAction::Sell => -1,
        }
    }

    pub fn from_signed(v: i8) -> Option<Self> {
        match v {
            1 => Some(TradeAction::Buy),
            -1 => Some(TradeAction::Sell),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeEvent {
    pub index: usize,
    pub action: TradeAction,
}

/// Ordered trade events. Valid lists alternate buy/sell starting with a
/// buy, with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeList {
    pub events: Vec<TradeEvent>,
    /// Strategy label, carried into reports.
    pub source: String,
}

impl TradeList {
    pub fn new(source: impl Into<String>) -> Self {
        TradeList { events: Vec::new(), source: source.into() }
    }

    pub fn push(&mut self, index: usize, action: TradeAction) {
        self.events.push(TradeEvent { index, action });
    }

    /// True when the list ends flat (equal buys and sells).
    pub fn ends_flat(&self) -> bool {
        self.events.len() % 2 == 0
    }

    pub fn validate(&self) -> Result<(), BacktestError> {
        for (i, ev) in self.events.iter().enumerate() {
            let want = if i % 2 == 0 { TradeAction::Buy } else { TradeAction::Sell };
            if ev.action != want {
                return Err(BacktestError::InvalidTradeList(format!(
                    "event {i} should be {want:?}, got {:?}",
                    ev.action
                )));
            }
            if i > 0 && self.events[i - 1].index >= ev.index {
                return Err(BacktestError::InvalidTradeList(format!(
                    "event indices not strictly increasing at {i}"
                )));
            }
        }
        Ok(())
    }
}

/// How many spread units one dollar of cash buys at entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sizing {
    /// Basis = Σ|aᵢ|·Sᵢ(t): bounds gross exposure, the default.
    GrossExposure,
    /// Basis = S₁(t): classic long-leg sizing, more aggressive.
    LongLeg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BacktestConfig {
    pub initial_wealth: f64,
    pub sizing: Sizing,
    /// Per-unit cost charged on entry and again on exit.
    pub transaction_cost: f64,
    /// Per-step yield on idle cash while flat.
    pub interest_rate: f64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            initial_wealth: 100.0,
            sizing: Sizing::GrossExposure,
            transaction_cost: 0.0,
            interest_rate: 0.0,
        }
    }
}

/// The five reported metrics, all but the Sharpe ratio in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub daily_ret_mean_pct: f64,
    pub daily_ret_std_pct: f64,
    pub daily_sharpe: f64,
    pub max_drawdown_pct: f64,
    pub cumul_pnl_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub wealth: Series,
    pub metrics: Metrics,
    pub sizing: Sizing,
    /// Strategy label from the trade list.
    pub source: String,
}

/// Entry-basis series for a spread built from panel legs: Σ|aᵢ|·Sᵢ(t)
/// under gross-exposure sizing, S₁(t) under long-leg sizing.
pub fn basis_series(
    legs: &PricePanel,
    coefficients: &[f64],
    sizing: Sizing,
) -> Result<Series, BacktestError> {
    if coefficients.len() != legs.n_assets() {
        return Err(BacktestError::DimensionMismatch {
            expected: legs.n_assets(),
            got: coefficients.len(),
        });
    }
    let values = match sizing {
        Sizing::GrossExposure => legs
            .prices
            .iter()
            .map(|row| row.iter().zip(coefficients).map(|(p, a)| a.abs() * p).sum())
            .collect(),
        Sizing::LongLeg => legs.prices.iter().map(|row| row[0]).collect(),
    };
    Ok(Series::new(values))
}

/// Run the wealth accounting for a spread traded through `trades`, sizing
/// entries against the panel legs.
pub fn run_backtest(
    spread: &Series,
    legs: &PricePanel,
    coefficients: &[f64],
    trades: &TradeList,
    config: &BacktestConfig,
) -> Result<BacktestReport, BacktestError> {
    let basis = basis_series(legs, coefficients, config.sizing)?;
    run_backtest_with_basis(spread, &basis, trades, config)
}

/// Same accounting with an explicit basis series. For a directly traded
/// simulated spread the basis is the spread itself.
pub fn run_backtest_with_basis(
    spread: &Series,
    basis: &Series,
    trades: &TradeList,
    config: &BacktestConfig,
) -> Result<BacktestReport, BacktestError> {
    trades.validate()?;
    let n = spread.len();
    if let Some(ev) = trades.events.iter().find(|ev| ev.index >= n) {
        return Err(BacktestError::OutOfBoundsTrade(ev.index));
    }
    debug_assert_eq!(basis.len(), n, "basis must cover the trading window");

    let x = &spread.values;
    let c = config.transaction_cost;
    let mut wealth = Vec::with_capacity(n);
    let mut cash = config.initial_wealth;
    let mut units = 0.0f64;
    let mut entry_x = 0.0f64;
    let mut next_event = trades.events.iter().peekable();

    for t in 0..n {
        let flat_before = units == 0.0;
        if t > 0 && flat_before && config.interest_rate != 0.0 {
            cash *= 1.0 + config.interest_rate;
        }
        if let Some(ev) = next_event.peek() {
            if ev.index == t {
                match ev.action {
                    TradeAction::Buy => {
                        let b = basis.values[t];
                        if !(b > 0.0) {
                            return Err(BacktestError::NonPositiveBasis { index: t, basis: b });
                        }
                        units = cash / b;
                        entry_x = x[t];
                        cash -= c * units;
                    }
                    TradeAction::Sell => {
                        cash += units * (x[t] - entry_x) - c * units;
                        units = 0.0;
                    }
                }
                next_event.next();
            }
        }
        let w = if units == 0.0 { cash } else { cash + units * (x[t] - entry_x) };
        wealth.push(w);
    }

    let wealth = Series::with_origin(wealth, trades.source.clone());
    let metrics = compute_metrics(&wealth)?;
    Ok(BacktestReport { wealth, metrics, sizing: config.sizing, source: trades.source.clone() })
}

/// Metrics of a wealth curve: daily return mean/std (%), unannualized
/// Sharpe ratio, maximum drawdown (%), cumulative PnL (%).
pub fn compute_metrics(wealth: &Series) -> Result<Metrics, BacktestError> {
    let w = &wealth.values;
    if w.len() < 2 || w.iter().any(|&v| !(v > 0.0)) {
        return Err(BacktestError::DegenerateWealth);
    }
    let returns: Vec<f64> = w.windows(2).map(|p| p[1] / p[0] - 1.0).collect();
    let mean = returns.iter().sum::<f64>() / returns.len() as f64;
    let std = sample_std(&returns);
    let sharpe = if std == 0.0 { 0.0 } else { mean / std };

    let mut peak = w[0];
    let mut max_dd = 0.0f64;
    for &v in w {
        if v > peak {
            peak = v;
        }
        max_dd = max_dd.min(v / peak - 1.0);
    }

    Ok(Metrics {
        daily_ret_mean_pct: mean * 100.0,
        daily_ret_std_pct: std * 100.0,
        daily_sharpe: sharpe,
        max_drawdown_pct: max_dd * 100.0,
        cumul_pnl_pct: (w[w.len() - 1] / w[0] - 1.0) * 100.0,
    })
}
