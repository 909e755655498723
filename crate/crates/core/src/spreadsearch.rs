//! Formation phase: grid search for the portfolio coefficients that
//! minimize the spread's empirical mean reversion time.
//!
//! The first coefficient is pinned to 1; the remaining ones scan a uniform
//! grid (default [−3, 3] in 0.01 steps). Degenerate candidates (near-zero
//! spread std, or sample variance at or above the optional cap) are
//! skipped rather than scored.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emrt::{compute_emrt, EmrtConfig};
use crate::marketdata::{combine, PricePanel, Series};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("every grid candidate was skipped or failed EMRT")]
    NoFeasibleCandidate,
    #[error("grid has {points} points, over the {budget} evaluation budget")]
    GridTooLarge { points: u128, budget: u64 },
    #[error("panel has no assets")]
    EmptyPanel,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_step: f64,
    /// EMRT threshold C applied to every candidate spread.
    pub c_threshold: f64,
    /// Optional cap M: candidates with sample variance ≥ M are skipped.
    pub variance_cap: Option<f64>,
    /// Floor on the candidate spread's sample std.
    pub min_spread_std: f64,
    /// Maximum number of grid evaluations before the search refuses to run.
    pub eval_budget: u64,
    /// Fall back to coordinate descent instead of erroring when the full
    /// grid exceeds the budget.
    pub coordinate_descent: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            grid_min: -3.0,
            grid_max: 3.0,
            grid_step: 0.01,
            c_threshold: 2.0,
            variance_cap: None,
            min_spread_std: 1e-8,
            eval_budget: 10_000_000,
            coordinate_descent: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if !(self.grid_min < self.grid_max) {
            return Err(SearchError::InvalidConfig(format!(
                "grid_min {} must be < grid_max {}",
                self.grid_min, self.grid_max
            )));
        }
        if !(self.grid_step > 0.0) {
            return Err(SearchError::InvalidConfig(format!(
                "grid_step must be > 0, got {}",
                self.grid_step
            )));
        }
        if !(self.min_spread_std > 0.0) {
            return Err(SearchError::InvalidConfig(format!(
                "min_spread_std must be > 0, got {}",
                self.min_spread_std
            )));
        }
        Ok(())
    }

    fn grid_values(&self) -> Vec<f64> {
        let n = ((self.grid_max - self.grid_min) / self.grid_step).round() as usize;
        (0..=n).map(|k| self.grid_min + k as f64 * self.grid_step).collect()
    }

    fn emrt_config(&self) -> EmrtConfig {
        EmrtConfig::with_c(self.c_threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Portfolio coefficients, coefficients[0] = 1.
    pub coefficients: Vec<f64>,
    pub emrt: f64,
    pub spread: Series,
    /// Grid points scored.
    pub evaluated: u64,
    /// Grid points skipped as degenerate or unscorable.
    pub skipped: u64,
}

struct Best {
    coefficients: Vec<f64>,
    emrt: f64,
    l1: f64,
}

impl Best {
    /// Minimal EMRT; ties by smaller L1 norm, then lexicographic
    /// coefficient order. Independent of evaluation order.
    fn offer(&mut self, coefficients: &[f64], emrt: f64) {
        let l1: f64 = coefficients.iter().map(|c| c.abs()).sum();
        let better = emrt < self.emrt
            || (emrt == self.emrt
                && (l1 < self.l1
                    || (l1 == self.l1 && coefficients < self.coefficients.as_slice())));
        if better {
            self.coefficients = coefficients.to_vec();
            self.emrt = emrt;
            self.l1 = l1;
        }
    }
}

/// Exhaustive scan over the coefficient grid (a₁ = 1 fixed), returning
/// the minimal-EMRT candidate.
pub fn search_coefficients(
    panel: &PricePanel,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    config.validate()?;
    let n_assets = panel.n_assets();
    if n_assets == 0 {
        return Err(SearchError::EmptyPanel);
    }
    let emrt_config = config.emrt_config();

    let mut evaluated = 0u64;
    let mut skipped = 0u64;
    let mut best = Best { coefficients: Vec::new(), emrt: f64::INFINITY, l1: f64::INFINITY };

    let score = |coefficients: &[f64],
                     best: &mut Best,
                     evaluated: &mut u64,
                     skipped: &mut u64|
     -> Option<f64> {
        let spread = combine(panel, coefficients).expect("coefficient length matches panel");
        let std = spread.sample_std();
        let feasible = std >= config.min_spread_std
            && config.variance_cap.is_none_or(|m| std * std < m);
        if !feasible {
            *skipped += 1;
            return None;
        }
        match compute_emrt(&spread, &emrt_config) {
            Ok(emrt) => {
                *evaluated += 1;
                best.offer(coefficients, emrt);
                Some(emrt)
            }
            Err(_) => {
                *skipped += 1;
                None
            }
        }
    };

    if n_assets == 1 {
        score(&[1.0], &mut best, &mut evaluated, &mut skipped);
    } else {
        let grid = config.grid_values();
        let free = n_assets - 1;
        let points = (grid.len() as u128).pow(free as u32);
        if points > config.eval_budget as u128 {
            if !config.coordinate_descent {
                return Err(SearchError::GridTooLarge { points, budget: config.eval_budget });
            }
            coordinate_descent(&grid, free, config.eval_budget, |coeffs| {
                score(coeffs, &mut best, &mut evaluated, &mut skipped)
            });
        } else {
            // odometer over the free coefficients
            let mut idx = vec![0usize; free];
            let mut coefficients = vec![1.0; n_assets];
            'grid: loop {
                for (slot, &i) in idx.iter().enumerate() {
                    coefficients[slot + 1] = grid[i];
                }
                score(&coefficients, &mut best, &mut evaluated, &mut skipped);
                for slot in (0..free).rev() {
                    idx[slot] += 1;
                    if idx[slot] < grid.len() {
                        continue 'grid;
                    }
                    idx[slot] = 0;
                    if slot == 0 {
                        break 'grid;
                    }
                }
            }
        }
    }

    if best.coefficients.is_empty() {
        return Err(SearchError::NoFeasibleCandidate);
    }
    let spread = combine(panel, &best.coefficients).expect("winning candidate recombines");
    Ok(SearchResult { coefficients: best.coefficients, emrt: best.emrt, spread, evaluated, skipped })
}

/// One-coefficient-at-a-time refinement: sweep each free coefficient over
/// the grid holding the others fixed, repeat until a full round improves
/// nothing or the budget runs out.
fn coordinate_descent(
    grid: &[f64],
    free: usize,
    budget: u64,
    mut score: impl FnMut(&[f64]) -> Option<f64>,
) {
    let mid = grid[grid.len() / 2];
    let mut coefficients = vec![1.0];
    coefficients.extend(std::iter::repeat_n(mid, free));
    let mut best_here = score(&coefficients);
    let mut spent = 1u64;

    loop {
        let mut improved = false;
        for slot in 1..=free {
            let held = coefficients[slot];
            let mut best_v = held;
            for &v in grid {
                if spent >= budget {
                    return;
                }
                coefficients[slot] = v;
                spent += 1;
                if let Some(e) = score(&coefficients) {
                    if best_here.is_none_or(|b| e < b) {
                        best_here = Some(e);
                        best_v = v;
                        improved = true;
                    }
                }
            }
            coefficients[slot] = best_v;
        }
        if !improved {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketdata::PricePanel;
    use crate::oumodel::{simulate_ou_path, OuParams, SimConfig};
    use chrono::NaiveDate;

    fn panel_from_columns(columns: Vec<Vec<f64>>) -> PricePanel {
        let n = columns[0].len();
        let start = NaiveDate::from_ymd_opt(2022, 1, 3).unwrap();
        PricePanel {
            dates: (0..n).map(|i| start + chrono::Days::new(i as u64)).collect(),
            tickers: (0..columns.len()).map(|i| format!("S{}", i + 1)).collect(),
            prices: (0..n).map(|row| columns.iter().map(|c| c[row]).collect()).collect(),
        }
    }

    /// S2 = slow trend + seasonal wave; S1 = 0.5·S2 + fast OU noise.
    /// The minimal-EMRT spread is S1 − 0.5·S2 = the OU noise.
    fn synthetic_pair(seed: u64) -> PricePanel {
        let n = 750;
        let s2: Vec<f64> = (0..n)
            .map(|t| {
                let t = t as f64;
                80.0 + 0.05 * t + 6.0 * (2.0 * std::f64::consts::PI * t / 250.0).sin()
            })
            .collect();
        let sim = SimConfig {
            params: OuParams { mu: 25.0, theta: 0.0, sigma: 4.0 },
            x0: 0.0,
            horizon: 1.0,
            n_steps: n,
            seed,
        };
        let noise = simulate_ou_path(&sim, 0).unwrap();
        let s1: Vec<f64> = s2.iter().zip(&noise.values).map(|(b, e)| 0.5 * b + 30.0 + e).collect();
        panel_from_columns(vec![s1, s2])
    }

    #[test]
    fn single_asset_returns_unit_coefficient() {
        let values: Vec<f64> = (0..300)
            .map(|t| (2.0 * std::f64::consts::PI * t as f64 / 50.0).sin())
            .collect();
        let panel = panel_from_columns(vec![values.clone()]);
        let config = SearchConfig { c_threshold: 1.0, ..Default::default() };
        let result = search_coefficients(&panel, &config).unwrap();
        assert_eq!(result.coefficients, vec![1.0]);
        let lone = compute_emrt(&Series::new(values), &EmrtConfig::with_c(1.0)).unwrap();
        assert_eq!(result.emrt, lone);
    }

    #[test]
    fn synthetic_pair_recovers_hedge_coefficient() {
        let panel = synthetic_pair(17);
        let result = search_coefficients(&panel, &SearchConfig::default()).unwrap();
        assert!(
            (result.coefficients[1] + 0.5).abs() <= 0.05,
            "a2 = {} should be near −0.5",
            result.coefficients[1]
        );
        assert_eq!(result.evaluated + result.skipped, 601);
    }

    #[test]
    fn identical_legs_skip_the_degenerate_candidate() {
        let s: Vec<f64> = (0..300)
            .map(|t| 50.0 + 5.0 * (2.0 * std::f64::consts::PI * t as f64 / 60.0).sin())
            .collect();
        let panel = panel_from_columns(vec![s.clone(), s]);
        let config = SearchConfig { c_threshold: 1.0, ..Default::default() };
        let result = search_coefficients(&panel, &config).unwrap();
        assert!(result.skipped >= 1);
        assert_ne!(result.coefficients[1], -1.0, "zero-variance candidate must be excluded");
    }

    #[test]
    fn grid_budget_is_enforced() {
        let panel = synthetic_pair(3);
        let config = SearchConfig { eval_budget: 100, ..Default::default() };
        assert!(matches!(
            search_coefficients(&panel, &config),
            Err(SearchError::GridTooLarge { points: 601, budget: 100 })
        ));
    }

    #[test]
    fn coordinate_descent_fallback_finds_the_full_scan_argmin() {
        // three assets, coarse grid: S1 = 0.5·S2 + 0.25·S3 + OU noise, so
        // the fast spread sits at a = (1, −0.5, −0.25), both on the grid
        let n = 600;
        let s2: Vec<f64> = (0..n)
            .map(|t| {
                let t = t as f64;
                80.0 + 0.04 * t + 5.0 * (2.0 * std::f64::consts::PI * t / 200.0).sin()
            })
            .collect();
        let s3: Vec<f64> = (0..n)
            .map(|t| {
                let t = t as f64;
                40.0 - 0.02 * t + 8.0 * (2.0 * std::f64::consts::PI * t / 130.0).cos()
            })
            .collect();
        let sim = SimConfig {
            params: OuParams { mu: 30.0, theta: 0.0, sigma: 3.0 },
            x0: 0.0,
            horizon: 1.0,
            n_steps: n,
            seed: 23,
        };
        let noise = simulate_ou_path(&sim, 0).unwrap();
        let s1: Vec<f64> = (0..n)
            .map(|t| 0.5 * s2[t] + 0.25 * s3[t] + 25.0 + noise.values[t])
            .collect();
        let panel = panel_from_columns(vec![s1, s2, s3]);

        let coarse = SearchConfig {
            grid_min: -1.0,
            grid_max: 1.0,
            grid_step: 0.05,
            ..Default::default()
        };
        let full = search_coefficients(&panel, &coarse).unwrap();

        // 41² = 1681 points exceed this budget, so the fallback kicks in
        let cd_config = SearchConfig { eval_budget: 1000, coordinate_descent: true, ..coarse };
        let cd = search_coefficients(&panel, &cd_config).unwrap();
        assert!(cd.evaluated + cd.skipped <= 1000);
        // a refinement pass can never beat the exhaustive scan
        assert!(cd.emrt >= full.emrt, "cd {} vs full {}", cd.emrt, full.emrt);

        // the CD contract: no single-coefficient grid move improves the
        // result (checked against an independent per-coordinate sweep)
        let emrt_config = EmrtConfig::with_c(cd_config.c_threshold);
        for slot in 1..cd.coefficients.len() {
            let mut probe = cd.coefficients.clone();
            let n_vals = ((coarse.grid_max - coarse.grid_min) / coarse.grid_step).round() as usize;
            for k in 0..=n_vals {
                probe[slot] = coarse.grid_min + k as f64 * coarse.grid_step;
                let spread = combine(&panel, &probe).unwrap();
                if spread.sample_std() < cd_config.min_spread_std {
                    continue;
                }
                if let Ok(e) = compute_emrt(&spread, &emrt_config) {
                    assert!(
                        e >= cd.emrt,
                        "coordinate move {probe:?} improves {e} < {}",
                        cd.emrt
                    );
                }
            }
        }
    }

    #[test]
    fn search_is_deterministic() {
        let panel = synthetic_pair(9);
        let a = search_coefficients(&panel, &SearchConfig::default()).unwrap();
        let b = search_coefficients(&panel, &SearchConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pair_argmin_transports_under_leg_and_grid_rescaling() {
        // scaling S2 by λ while scaling the grid by 1/λ reaches the same
        // spread candidates, so the chosen spread series is identical
        let lambda = 2.0;
        let panel = synthetic_pair(13);
        let scaled = panel_from_columns(vec![
            (0..panel.n_dates()).map(|t| panel.prices[t][0]).collect(),
            (0..panel.n_dates()).map(|t| panel.prices[t][1] * lambda).collect(),
        ]);

        let base = SearchConfig::default();
        let rescaled = SearchConfig {
            grid_min: base.grid_min / lambda,
            grid_max: base.grid_max / lambda,
            grid_step: base.grid_step / lambda,
            ..base
        };
        let a = search_coefficients(&panel, &base).unwrap();
        let b = search_coefficients(&scaled, &rescaled).unwrap();

        assert_eq!(a.emrt, b.emrt);
        for (x, y) in a.spread.values.iter().zip(&b.spread.values) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{x} vs {y}");
        }
    }
}
