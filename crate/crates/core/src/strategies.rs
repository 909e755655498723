//! Benchmark strategies: the distance method (SSD pair selection with
//! band rules around the formation mean) and OU calibration trading
//! (hedge ratio by likelihood score, bands of width k·σ_eq around θ̂).
//!
//! Both emit long-only alternating trade lists with a forced close at the
//! end of the trading window.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backtest::{TradeAction, TradeList};
use crate::marketdata::{normalize_first, MarketDataError, PricePanel, Series};
use crate::oumodel::{fit_ou_mle, sigma_eq, OuError, OuParams};

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("formation std is not positive")]
    DegenerateStd,
    #[error("no hedge ratio in the grid produced a feasible OU fit")]
    NoFeasibleB,
    #[error("invalid OU parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    MarketData(#[from] MarketDataError),
    #[error("series too short for calibration: {got} points, need {need}")]
    TooShort { got: usize, need: usize },
}

/// SSD score of one unordered pair of tickers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub pair: (String, String),
    pub ssd: f64,
}

/// Rank all unordered pairs by the sum of squared deviations of their
/// first-day-normalized price series, ascending; ties break by ticker
/// order. Fewer than two assets yield an empty ranking.
pub fn ssd_rank(panel: &PricePanel) -> Result<Vec<PairScore>, StrategyError> {
    let n = panel.n_assets();
    let mut normalized = Vec::with_capacity(n);
    for asset in 0..n {
        normalized.push(normalize_first(&panel.column(asset))?);
    }
    let mut scores = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let ssd = normalized[i]
                .values
                .iter()
                .zip(&normalized[j].values)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            scores.push(PairScore {
                pair: (panel.tickers[i].clone(), panel.tickers[j].clone()),
                ssd,
            });
        }
    }
    scores.sort_by(|a, b| {
        a.ssd
            .partial_cmp(&b.ssd)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.pair.cmp(&b.pair))
    });
    Ok(scores)
}

/// Entry/exit band: open long below center − width, close above
/// center + width (or at the center under [`CloseRule::Mean`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRule {
    pub center: f64,
    pub width: f64,
    pub k: f64,
}

impl BandRule {
    pub fn new(center: f64, scale: f64, k: f64) -> Self {
        BandRule { center, width: k * scale, k }
    }
}

/// When an open long is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CloseRule {
    /// Close when X rises above center + width.
    Band,
    /// Close at the first touch of the center (classic convergence exit).
    Mean,
}

/// Stateful band scan shared by both benchmarks. From flat, buy at the
/// first X_t < center − width; from long, sell per the close rule. An
/// open position at the end is closed at the last price.
pub fn band_signals(spread: &Series, rule: &BandRule, close: CloseRule, source: &str) -> TradeList {
    let x = &spread.values;
    let mut trades = TradeList::new(source);
    let mut long = false;
    let n = x.len();
    for t in 0..n {
        if !long {
            // never open on the final sample; it would close immediately
            if t + 1 < n && x[t] - rule.center < -rule.width {
                trades.push(t, TradeAction::Buy);
                long = true;
            }
        } else {
            let exit = match close {
                CloseRule::Band => x[t] - rule.center > rule.width,
                CloseRule::Mean => x[t] >= rule.center,
            };
            if exit {
                trades.push(t, TradeAction::Sell);
                long = false;
            }
        }
    }
    if long {
        trades.push(n - 1, TradeAction::Sell);
    }
    trades
}

/// Distance-method signals with the band close rule: x̄ and s must come
/// from the formation window, k defaults to 1 in the experiments.
pub fn dm_signals(
    spread: &Series,
    mean: f64,
    std: f64,
    k: f64,
) -> Result<TradeList, StrategyError> {
    dm_signals_with(spread, mean, std, k, CloseRule::Band)
}

pub fn dm_signals_with(
    spread: &Series,
    mean: f64,
    std: f64,
    k: f64,
    close: CloseRule,
) -> Result<TradeList, StrategyError> {
    if !(std > 0.0) {
        return Err(StrategyError::DegenerateStd);
    }
    Ok(band_signals(spread, &BandRule::new(mean, std, k), close, "dm"))
}

/// Winning hedge ratio of [`ou_fit_pair`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairFit {
    pub b: f64,
    pub params: OuParams,
    pub avg_log_likelihood: f64,
}

/// Hedge-ratio grid for the OU benchmark, inclusive with uniform step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for BGrid {
    fn default() -> Self {
        BGrid { min: 0.01, max: 3.0, step: 0.01 }
    }
}

impl BGrid {
    fn values(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step).round() as usize;
        (0..=n).map(|k| self.min + k as f64 * self.step).collect()
    }
}

/// Pick B maximizing the average log-likelihood of the OU fit to
/// S₁ − B·S₂ (dt = 1 trading day). Grid points whose fit errors are
/// skipped; ties break toward the smaller B.
pub fn ou_fit_pair(s1: &Series, s2: &Series, grid: &BGrid) -> Result<PairFit, StrategyError> {
    let n = s1.len().min(s2.len());
    if n < 10 {
        return Err(StrategyError::TooShort { got: n, need: 10 });
    }
    // scores within rounding noise of each other count as a tie, so a
    // degenerate leg (constant S2) deterministically keeps the smallest B
    let tie_tol = |ll: f64| 1e-9 * (1.0 + ll.abs());
    let mut best: Option<PairFit> = None;
    let mut spread = vec![0.0; n];
    for b in grid.values() {
        for t in 0..n {
            spread[t] = s1.values[t] - b * s2.values[t];
        }
        let fit = match fit_ou_mle(&Series::new(spread.clone()), 1.0) {
            Ok(f) => f,
            Err(_) => continue,
        };
        let better = best
            .as_ref()
            .is_none_or(|cur| {
                fit.avg_log_likelihood > cur.avg_log_likelihood + tie_tol(cur.avg_log_likelihood)
            });
        if better {
            best = Some(PairFit { b, params: fit.params, avg_log_likelihood: fit.avg_log_likelihood });
        }
    }
    best.ok_or(StrategyError::NoFeasibleB)
}

/// OU-method signals: bands of width k·σ_eq around the calibrated θ̂,
/// with the same stateful scan and forced close as the distance method.
pub fn ou_signals(
    spread: &Series,
    params: &OuParams,
    k: f64,
) -> Result<TradeList, StrategyError> {
    let scale = sigma_eq(params).map_err(|e: OuError| StrategyError::InvalidParams(e.to_string()))?;
    Ok(band_signals(spread, &BandRule::new(params.theta, scale, k), CloseRule::Band, "ou"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oumodel::{simulate_ou_path, SimConfig};
    use chrono::NaiveDate;

    fn panel_from_columns(tickers: &[&str], columns: Vec<Vec<f64>>) -> PricePanel {
        let n = columns[0].len();
        let start = NaiveDate::from_ymd_opt(2022, 1, 3).unwrap();
        PricePanel {
            dates: (0..n).map(|i| start + chrono::Days::new(i as u64)).collect(),
            tickers: tickers.iter().map(|s| s.to_string()).collect(),
            prices: (0..n).map(|row| columns.iter().map(|c| c[row]).collect()).collect(),
        }
    }

    #[test]
    fn ssd_examples() {
        let a = vec![100.0, 110.0];
        let b = vec![200.0, 220.0]; // identical once normalized
        let c = vec![50.0, 60.0]; // normalized [1, 1.2]
        let panel = panel_from_columns(&["A", "B", "C"], vec![a, b, c]);
        let scores = ssd_rank(&panel).unwrap();
        assert_eq!(scores.len(), 3);
        assert_eq!(scores[0].pair, ("A".into(), "B".into()));
        assert_eq!(scores[0].ssd, 0.0);
        // A vs C: (1−1)² + (1.1−1.2)² = 0.01
        let ac = scores.iter().find(|s| s.pair == ("A".into(), "C".into())).unwrap();
        assert!((ac.ssd - 0.01).abs() < 1e-12);
    }

    #[test]
    fn ssd_rank_invariant_under_per_asset_rescaling() {
        let a = vec![100.0, 104.0, 99.0, 103.0];
        let b = vec![50.0, 53.0, 49.0, 52.0];
        let c = vec![200.0, 207.0, 196.0, 205.0];
        let panel = panel_from_columns(&["A", "B", "C"], vec![a.clone(), b.clone(), c.clone()]);
        let scaled = panel_from_columns(
            &["A", "B", "C"],
            vec![
                a.iter().map(|v| v * 3.0).collect(),
                b.iter().map(|v| v * 0.25).collect(),
                c.iter().map(|v| v * 10.0).collect(),
            ],
        );
        let plain = ssd_rank(&panel).unwrap();
        let resc = ssd_rank(&scaled).unwrap();
        for (x, y) in plain.iter().zip(&resc) {
            assert_eq!(x.pair, y.pair);
            assert!((x.ssd - y.ssd).abs() <= 1e-12 * x.ssd.max(1.0));
        }
    }

    #[test]
    fn dm_band_walkthrough() {
        // x̄=0, s=1, k=1: buy at t=1 (−1.5), sell at t=3 (+1.5)
        let spread = Series::new(vec![0.0, -1.5, 0.0, 1.5, 0.0]);
        let trades = dm_signals(&spread, 0.0, 1.0, 1.0).unwrap();
        let got: Vec<(usize, TradeAction)> =
            trades.events.iter().map(|e| (e.index, e.action)).collect();
        assert_eq!(got, vec![(1, TradeAction::Buy), (3, TradeAction::Sell)]);
    }

    #[test]
    fn dm_inside_band_never_trades() {
        let spread = Series::new(vec![0.1, -0.5, 0.4, -0.3, 0.2]);
        let trades = dm_signals(&spread, 0.0, 1.0, 1.0).unwrap();
        assert!(trades.events.is_empty());
    }

    #[test]
    fn dm_zero_std_errors() {
        let spread = Series::new(vec![1.0, 2.0]);
        assert!(matches!(dm_signals(&spread, 0.0, 0.0, 1.0), Err(StrategyError::DegenerateStd)));
    }

    #[test]
    fn dm_mean_close_rule_exits_at_convergence() {
        let spread = Series::new(vec![0.0, -1.5, -0.2, 0.1, 1.5]);
        let trades = dm_signals_with(&spread, 0.0, 1.0, 1.0, CloseRule::Mean).unwrap();
        let got: Vec<(usize, TradeAction)> =
            trades.events.iter().map(|e| (e.index, e.action)).collect();
        assert_eq!(got, vec![(1, TradeAction::Buy), (3, TradeAction::Sell)]);
    }

    #[test]
    fn open_position_is_force_closed_at_end() {
        let spread = Series::new(vec![0.0, -1.5, -1.4, -1.3]);
        let trades = dm_signals(&spread, 0.0, 1.0, 1.0).unwrap();
        let got: Vec<(usize, TradeAction)> =
            trades.events.iter().map(|e| (e.index, e.action)).collect();
        assert_eq!(got, vec![(1, TradeAction::Buy), (3, TradeAction::Sell)]);
        assert!(trades.ends_flat());
    }

    #[test]
    fn ou_fit_recovers_constructed_hedge_ratio() {
        // S1 = 0.7·S2 + OU(μ=5, θ=0, σ=0.5); dt = 1 day
        let n = 500;
        let s2: Vec<f64> = (0..n)
            .map(|t| {
                let t = t as f64;
                60.0 + 0.02 * t + 4.0 * (2.0 * std::f64::consts::PI * t / 120.0).sin()
            })
            .collect();
        let sim = SimConfig {
            params: OuParams { mu: 5.0, theta: 0.0, sigma: 0.5 },
            x0: 0.0,
            horizon: (n - 1) as f64,
            n_steps: n,
            seed: 42,
        };
        let noise = simulate_ou_path(&sim, 0).unwrap();
        let s1: Vec<f64> = s2.iter().zip(&noise.values).map(|(b, e)| 0.7 * b + e).collect();

        let fit = ou_fit_pair(&Series::new(s1), &Series::new(s2), &BGrid::default()).unwrap();
        assert!((fit.b - 0.7).abs() <= 0.05, "B = {}", fit.b);
    }

    #[test]
    fn ou_fit_constant_leg_ties_to_smallest_b() {
        // S2 constant: every B shifts S1 by a constant, identical dynamics
        // and likelihood, so the tie-break keeps the first grid value.
        let sim = SimConfig {
            params: OuParams { mu: 3.0, theta: 5.0, sigma: 0.4 },
            x0: 5.0,
            horizon: 199.0,
            n_steps: 200,
            seed: 8,
        };
        let s1 = simulate_ou_path(&sim, 0).unwrap();
        let s2 = Series::new(vec![10.0; 200]);
        let fit = ou_fit_pair(&s1, &s2, &BGrid::default()).unwrap();
        assert!((fit.b - 0.01).abs() < 1e-12, "B = {}", fit.b);
    }

    #[test]
    fn ou_signal_walkthrough() {
        // θ̂=0, σ_eq=1 (σ=√2·... pick μ=0.5, σ=1 → σ_eq=1), k=0.5
        let params = OuParams { mu: 0.5, theta: 0.0, sigma: 1.0 };
        let spread = Series::new(vec![0.0, -0.6, 0.6]);
        let trades = ou_signals(&spread, &params, 0.5).unwrap();
        let got: Vec<(usize, TradeAction)> =
            trades.events.iter().map(|e| (e.index, e.action)).collect();
        assert_eq!(got, vec![(1, TradeAction::Buy), (2, TradeAction::Sell)]);
    }

    #[test]
    fn ou_signals_flat_at_center_never_trade() {
        let params = OuParams { mu: 0.5, theta: 3.0, sigma: 1.0 };
        let spread = Series::new(vec![3.0; 10]);
        let trades = ou_signals(&spread, &params, 0.5).unwrap();
        assert!(trades.events.is_empty());
    }

    #[test]
    fn ou_signals_reject_bad_params() {
        let params = OuParams { mu: -1.0, theta: 0.0, sigma: 1.0 };
        assert!(matches!(
            ou_signals(&Series::new(vec![0.0, 1.0]), &params, 0.5),
            Err(StrategyError::InvalidParams(_))
        ));
    }
}
