//! Tabular Q-learning agent for mean-reversion trading.
//!
//! States encode the direction and size of the last `l` percentage price
//! moves (buckets ±1 moderate, ±2 beyond the k% threshold) together with
//! the position flag, since the legal action set depends on the position:
//! flat may buy or hold, long may sell or hold. Shorting is never allowed.
//!
//! Training runs on simulated OU spreads where the true long-term mean θ
//! is known, with the reward R = A·(θ − X) − c·|A|. On real data the mean
//! is unknown, so evaluation is a pure greedy rollout emitting trades.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backtest::{TradeAction, TradeList};
use crate::marketdata::{sample_std, Series};
use crate::oumodel::{simulate_ou_with, OuParams, SimConfig};
use crate::seeding::{stream, StreamKind};

#[derive(Debug, Error)]
pub enum RlError {
    #[error("window of {got} prices is too short; need {need}")]
    WindowTooShort { got: usize, need: usize },
    #[error("reference price at offset {index} is too close to zero for percentage encoding")]
    ZeroReferencePrice { index: usize },
    #[error("action {action:?} is illegal from position {position:?}")]
    IllegalAction { action: Action, position: Position },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("persisted table is corrupt: {0}")]
    CorruptTable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    Flat,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Sell,
    Hold,
    Buy,
}

impl Action {
    pub fn signed(self) -> i8 {
        match self {
            Action::Sell => -1,
            Action::Hold => 0,
            Action::Buy => 1,
        }
    }

    pub fn from_signed(v: i8) -> Option<Self> {
        match v {
            -1 => Some(Action::Sell),
            0 => Some(Action::Hold),
            1 => Some(Action::Buy),
            _ => None,
        }
    }

    fn slot(self) -> usize {
        match self {
            Action::Sell => 0,
            Action::Hold => 1,
            Action::Buy => 2,
        }
    }
}

const ALL_ACTIONS: [Action; 3] = [Action::Sell, Action::Hold, Action::Buy];

/// Actions permitted from a position: no short entry, no doubling up.
pub fn legal_actions(position: Position) -> &'static [Action; 2] {
    match position {
        Position::Flat => &[Action::Hold, Action::Buy],
        Position::Long => &[Action::Sell, Action::Hold],
    }
}

fn apply_action(position: Position, action: Action) -> Position {
    match action {
        Action::Buy => Position::Long,
        Action::Sell => Position::Flat,
        Action::Hold => position,
    }
}

/// Move-direction bucket for one percentage change:
/// +2 if π > k, +1 if 0 ≤ π ≤ k, −1 if −k ≤ π < 0, −2 if π < −k.
fn bucket(pi: f64, k: f64) -> i8 {
    if pi > k {
        2
    } else if pi >= 0.0 {
        1
    } else if pi >= -k {
        -1
    } else {
        -2
    }
}

fn digit(d: i8) -> usize {
    match d {
        -2 => 0,
        -1 => 1,
        1 => 2,
        _ => 3,
    }
}

/// Encoded market state: `l` move buckets plus the position flag.
/// `index()` is a unique integer in [0, 2·4^l).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateCode {
    pub directions: Vec<i8>,
    pub position: Position,
}

impl StateCode {
    pub fn index(&self) -> usize {
        let mut idx = 0usize;
        for &d in &self.directions {
            idx = idx * 4 + digit(d);
        }
        let n_dir = 1usize << (2 * self.directions.len());
        match self.position {
            Position::Flat => idx,
            Position::Long => idx + n_dir,
        }
    }
}

/// How price moves are bucketed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncodingMode {
    /// Percentage changes π = 100·(P_i − P_{i−1})/P_{i−1}, threshold k in
    /// percent. Aborts when a reference price is too close to zero.
    Pct,
    /// Differences scaled by the formation std, threshold k in std units.
    /// Robust for spreads that cross zero.
    NormDiff,
}

/// Encode a trailing window of l+1 prices into a state. The standalone
/// form uses the percentage mode with an exact-zero reference guard; the
/// training and evaluation loops use a scale-aware guard via [`Encoder`].
pub fn encode_state(window: &[f64], k_pct: f64, position: Position) -> Result<StateCode, RlError> {
    Encoder { mode: EncodingMode::Pct, k: k_pct, zero_guard: 0.0, scale: 1.0 }
        .encode(window, position)
}

pub(crate) struct Encoder {
    mode: EncodingMode,
    k: f64,
    /// Pct mode: abort when |reference| ≤ this.
    zero_guard: f64,
    /// NormDiff mode: the formation std the differences are scaled by.
    scale: f64,
}

impl Encoder {
    fn for_series(config: &RlConfig, values: &[f64]) -> Encoder {
        let std = sample_std(values);
        match config.encoding {
            EncodingMode::Pct => Encoder {
                mode: EncodingMode::Pct,
                k: config.move_threshold,
                zero_guard: 1e-6 * std,
                scale: 1.0,
            },
            EncodingMode::NormDiff => Encoder {
                mode: EncodingMode::NormDiff,
                k: config.move_threshold,
                zero_guard: 0.0,
                scale: if std > 0.0 { std } else { 1.0 },
            },
        }
    }

    fn encode(&self, window: &[f64], position: Position) -> Result<StateCode, RlError> {
        let l = window.len().checked_sub(1).filter(|&l| l >= 1).ok_or(
            RlError::WindowTooShort { got: window.len(), need: 2 },
        )?;
        let mut directions = Vec::with_capacity(l);
        for i in 1..window.len() {
            directions.push(self.bucket_at(window, i)?);
        }
        Ok(StateCode { directions, position })
    }

    /// State index without materializing the StateCode; hot-loop path.
    fn encode_index(&self, window: &[f64], position: Position) -> Result<usize, RlError> {
        let mut idx = 0usize;
        for i in 1..window.len() {
            idx = idx * 4 + digit(self.bucket_at(window, i)?);
        }
        let n_dir = 1usize << (2 * (window.len() - 1));
        Ok(match position {
            Position::Flat => idx,
            Position::Long => idx + n_dir,
        })
    }

    fn bucket_at(&self, window: &[f64], i: usize) -> Result<i8, RlError> {
        let pi = match self.mode {
            EncodingMode::Pct => {
                let reference = window[i - 1];
                if reference.abs() <= self.zero_guard || reference == 0.0 {
                    return Err(RlError::ZeroReferencePrice { index: i - 1 });
                }
                (window[i] - reference) / reference * 100.0
            }
            EncodingMode::NormDiff => (window[i] - window[i - 1]) / self.scale,
        };
        Ok(bucket(pi, self.k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RlConfig {
    /// Lookback window length l: states use the last l moves.
    pub lookback: usize,
    /// Bucket threshold k: percent in Pct mode, std units in NormDiff mode.
    pub move_threshold: f64,
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon: f64,
    pub episodes: usize,
    /// Cost per trade in the training reward.
    pub transaction_cost: f64,
    /// Per-step rate, used only by backtest reporting.
    pub interest_rate: f64,
    pub seed: u64,
    pub encoding: EncodingMode,
}

impl Default for RlConfig {
    fn default() -> Self {
        RlConfig {
            lookback: 4,
            move_threshold: 3.0,
            learning_rate: 0.1,
            discount: 0.99,
            epsilon: 0.1,
            episodes: 10,
            transaction_cost: 0.0,
            interest_rate: 0.0,
            seed: 0,
            encoding: EncodingMode::Pct,
        }
    }
}

impl RlConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        let fail = |m: String| Err(RlError::InvalidConfig(m));
        if self.lookback < 1 {
            return fail(format!("lookback must be >= 1, got {}", self.lookback));
        }
        if self.lookback > 12 {
            return fail(format!("lookback {} would allocate 2*4^l states", self.lookback));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return fail(format!("learning_rate must be in (0, 1], got {}", self.learning_rate));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return fail(format!("discount must be in [0, 1], got {}", self.discount));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return fail(format!("epsilon must be in [0, 1], got {}", self.epsilon));
        }
        if !(self.move_threshold > 0.0) {
            return fail(format!("move_threshold must be > 0, got {}", self.move_threshold));
        }
        Ok(())
    }
}

/// Dense action-value table over the 2·4^l state codes, with visit counts.
/// Unvisited entries stay 0.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    lookback: usize,
    values: Vec<f64>,
    visits: Vec<u64>,
}

impl QTable {
    pub fn new(lookback: usize) -> Self {
        let n = 2 * (1usize << (2 * lookback)) * 3;
        QTable { lookback, values: vec![0.0; n], visits: vec![0; n] }
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn n_state_codes(&self) -> usize {
        2 * (1usize << (2 * self.lookback))
    }

    fn slot(&self, state_index: usize, action: Action) -> usize {
        debug_assert!(state_index < self.n_state_codes());
        state_index * 3 + action.slot()
    }

    pub fn get(&self, state: &StateCode, action: Action) -> f64 {
        self.values[self.slot(state.index(), action)]
    }

    pub fn visits(&self, state: &StateCode, action: Action) -> u64 {
        self.visits[self.slot(state.index(), action)]
    }

    pub fn set(&mut self, state: &StateCode, action: Action, value: f64) {
        let slot = self.slot(state.index(), action);
        self.values[slot] = value;
    }

    fn position_of(&self, state_index: usize) -> Position {
        if state_index < self.n_state_codes() / 2 {
            Position::Flat
        } else {
            Position::Long
        }
    }

    /// Greedy action among the legal ones; ties prefer Hold, then the
    /// lower signed action.
    fn greedy_idx(&self, state_index: usize) -> Action {
        let legal = legal_actions(self.position_of(state_index));
        let mut best = None::<(Action, f64)>;
        for &a in legal {
            let q = self.values[self.slot(state_index, a)];
            best = match best {
                None => Some((a, q)),
                Some((b, bq)) => {
                    if q > bq || (q == bq && tie_rank(a) < tie_rank(b)) {
                        Some((a, q))
                    } else {
                        Some((b, bq))
                    }
                }
            };
        }
        best.expect("legal action set is never empty").0
    }

    fn max_legal_idx(&self, state_index: usize) -> f64 {
        legal_actions(self.position_of(state_index))
            .iter()
            .map(|&a| self.values[self.slot(state_index, a)])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn update_idx(
        &mut self,
        state_index: usize,
        action: Action,
        reward: f64,
        next_state_index: Option<usize>,
        alpha: f64,
        gamma: f64,
    ) {
        let bootstrap = next_state_index.map_or(0.0, |s| self.max_legal_idx(s));
        let slot = self.slot(state_index, action);
        let q = self.values[slot];
        self.values[slot] = q + alpha * (reward + gamma * bootstrap - q);
        self.visits[slot] += 1;
    }

    /// Rows (state index, action, value, visits) in a fixed order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, Action, f64, u64)> + '_ {
        (0..self.n_state_codes()).flat_map(move |s| {
            ALL_ACTIONS.iter().map(move |&a| {
                let slot = s * 3 + a.slot();
                (s, a, self.values[slot], self.visits[slot])
            })
        })
    }
}

fn tie_rank(a: Action) -> u8 {
    // prefer hold, then the lower signed action
    match a {
        Action::Hold => 0,
        Action::Sell => 1,
        Action::Buy => 2,
    }
}

/// Training reward R = A·(θ − X) − c·|A| (θ is the true spread mean).
pub fn reward(action: Action, x: f64, theta: f64, cost: f64) -> f64 {
    let a = action.signed() as f64;
    a * (theta - x) - cost * a.abs()
}

/// One Q-learning update toward r + γ·max over the successor's legal
/// actions. `next` = None marks a terminal transition (no bootstrap).
pub fn q_update(
    table: &mut QTable,
    state: &StateCode,
    action: Action,
    reward: f64,
    next: Option<&StateCode>,
    alpha: f64,
    gamma: f64,
) -> Result<(), RlError> {
    if !legal_actions(state.position).contains(&action) {
        return Err(RlError::IllegalAction { action, position: state.position });
    }
    table.update_idx(state.index(), action, reward, next.map(StateCode::index), alpha, gamma);
    Ok(())
}

/// Epsilon-greedy selection over the legal actions of the state.
pub fn select_action(
    table: &QTable,
    state: &StateCode,
    epsilon: f64,
    rng: &mut impl Rng,
) -> Action {
    select_action_idx(table, state.index(), state.position, epsilon, rng)
}

fn select_action_idx(
    table: &QTable,
    state_index: usize,
    position: Position,
    epsilon: f64,
    rng: &mut impl Rng,
) -> Action {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        let legal = legal_actions(position);
        legal[rng.random_range(0..legal.len())]
    } else {
        table.greedy_idx(state_index)
    }
}

/// Simulated training environment: an ensemble of OU spread paths with
/// per-path parameters drawn uniformly from the configured ranges. Fixed
/// parameters are ranges with lo = hi. Every path starts at its own θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OuEnvConfig {
    pub mu_range: (f64, f64),
    pub theta_range: (f64, f64),
    pub sigma_range: (f64, f64),
    pub horizon: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
}

impl Default for OuEnvConfig {
    fn default() -> Self {
        OuEnvConfig {
            mu_range: (1.0, 1.0),
            theta_range: (1.0, 1.0),
            sigma_range: (0.1, 0.1),
            horizon: 252.0,
            n_steps: 252,
            n_paths: 10_000,
            seed: 0,
        }
    }
}

impl OuEnvConfig {
    fn validate(&self) -> Result<(), RlError> {
        let ranges = [
            ("mu", self.mu_range),
            ("theta", self.theta_range),
            ("sigma", self.sigma_range),
        ];
        for (name, (lo, hi)) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(RlError::InvalidConfig(format!("bad {name} range ({lo}, {hi})")));
            }
        }
        if self.mu_range.0 <= 0.0 {
            return Err(RlError::InvalidConfig("mu range must be positive".into()));
        }
        if self.sigma_range.0 < 0.0 {
            return Err(RlError::InvalidConfig("sigma range must be non-negative".into()));
        }
        if self.n_steps < 2 || !(self.horizon > 0.0) {
            return Err(RlError::InvalidConfig("need n_steps >= 2 and horizon > 0".into()));
        }
        Ok(())
    }
}

pub struct OuEnv {
    config: OuEnvConfig,
}

impl OuEnv {
    pub fn new(config: OuEnvConfig) -> Result<Self, RlError> {
        config.validate()?;
        Ok(OuEnv { config })
    }

    pub fn config(&self) -> &OuEnvConfig {
        &self.config
    }

    pub fn n_paths(&self) -> usize {
        self.config.n_paths
    }

    /// Path `idx` and its true θ. Deterministic per (seed, idx) regardless
    /// of generation order or total path count.
    pub fn path(&self, idx: u64) -> (Series, f64) {
        let mut param_rng = stream(self.config.seed, StreamKind::EnvParams, idx);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng, (lo, hi): (f64, f64)| {
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..=hi)
            }
        };
        let mu = draw(&mut param_rng, self.config.mu_range);
        let theta = draw(&mut param_rng, self.config.theta_range);
        let sigma = draw(&mut param_rng, self.config.sigma_range);

        let sim = SimConfig {
            params: OuParams { mu, theta, sigma },
            x0: theta,
            horizon: self.config.horizon,
            n_steps: self.config.n_steps,
            seed: self.config.seed,
        };
        let mut path_rng = stream(self.config.seed, StreamKind::EnvPath, idx);
        (simulate_ou_with(&sim, &mut path_rng), theta)
    }
}

/// Train a fresh table on the simulated environment. One episode is a
/// full pass over all paths, shuffled per episode under the seed. An open
/// long at a path's end is force-liquidated with a terminal update.
pub fn train(env: &OuEnv, config: &RlConfig) -> Result<QTable, RlError> {
    config.validate()?;
    let need = config.lookback + 2;
    if env.config.n_steps < need {
        return Err(RlError::WindowTooShort { got: env.config.n_steps, need });
    }

    let mut table = QTable::new(config.lookback);
    let mut action_rng = stream(config.seed, StreamKind::TrainAction, 0);

    for episode in 0..config.episodes {
        let mut order: Vec<usize> = (0..env.n_paths()).collect();
        order.shuffle(&mut stream(config.seed, StreamKind::TrainShuffle, episode as u64));

        for &p in &order {
            let (series, theta) = env.path(p as u64);
            let encoder = Encoder::for_series(config, &series.values);
            walk_training_path(&mut table, &series.values, theta, config, &encoder, &mut action_rng)?;
        }
    }
    Ok(table)
}

fn walk_training_path(
    table: &mut QTable,
    x: &[f64],
    theta: f64,
    config: &RlConfig,
    encoder: &Encoder,
    action_rng: &mut impl Rng,
) -> Result<(), RlError> {
    let l = config.lookback;
    let n = x.len();
    let mut position = Position::Flat;

    for t in l..n - 1 {
        let si = encoder.encode_index(&x[t - l..=t], position)?;
        let action = select_action_idx(table, si, position, config.epsilon, action_rng);
        let r = reward(action, x[t], theta, config.transaction_cost);
        let next_position = apply_action(position, action);
        let si_next = encoder.encode_index(&x[t - l + 1..=t + 1], next_position)?;
        table.update_idx(si, action, r, Some(si_next), config.learning_rate, config.discount);
        position = next_position;
    }

    if position == Position::Long {
        let si = encoder.encode_index(&x[n - 1 - l..=n - 1], Position::Long)?;
        let r = reward(Action::Sell, x[n - 1], theta, config.transaction_cost);
        table.update_idx(si, Action::Sell, r, None, config.learning_rate, config.discount);
    }
    Ok(())
}

/// Greedy (ε = 0) rollout over a spread, emitting the trade list. An open
/// long is force-closed at the last index.
pub fn evaluate(table: &QTable, spread: &Series, config: &RlConfig) -> Result<TradeList, RlError> {
    rollout(table, spread, config, 0.0, &mut NoRng)
}

/// Rollout with exploration probability ε; ε = 1 on a zero table is the
/// uniform random-legal-action baseline.
pub fn rollout(
    table: &QTable,
    spread: &Series,
    config: &RlConfig,
    epsilon: f64,
    rng: &mut impl Rng,
) -> Result<TradeList, RlError> {
    let l = config.lookback;
    let n = spread.len();
    if n < l + 2 {
        return Err(RlError::WindowTooShort { got: n, need: l + 2 });
    }
    let x = &spread.values;
    let encoder = Encoder::for_series(config, x);
    let mut trades = TradeList::new("rl");
    let mut position = Position::Flat;

    for t in l..n - 1 {
        let si = encoder.encode_index(&x[t - l..=t], position)?;
        let action = select_action_idx(table, si, position, epsilon, rng);
        match action {
            Action::Buy => {
                trades.push(t, TradeAction::Buy);
                position = Position::Long;
            }
            Action::Sell => {
                trades.push(t, TradeAction::Sell);
                position = Position::Flat;
            }
            Action::Hold => {}
        }
    }
    if position == Position::Long {
        trades.push(n - 1, TradeAction::Sell);
    }
    Ok(trades)
}

/// Stand-in RNG for the ε = 0 rollout; any draw is a logic error.
struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("greedy rollout must not draw randomness")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("greedy rollout must not draw randomness")
    }
    fn fill_bytes(&mut self, _dest: &mut [u8]) {
        unreachable!("greedy rollout must not draw randomness")
    }
}

/// Persist a table as a flat CSV (state,action,value,visits) plus a JSON
/// sidecar holding the config, so trained agents are portable and
/// diffable.
pub fn save_qtable(
    csv_path: impl AsRef<Path>,
    sidecar_path: impl AsRef<Path>,
    table: &QTable,
    config: &RlConfig,
) -> Result<(), RlError> {
    let mut out = String::from("state,action,value,visits\n");
    for (state, action, value, visits) in table.entries() {
        out.push_str(&format!("{state},{},{value},{visits}\n", action.signed()));
    }
    fs::write(csv_path, out)?;
    let sidecar = serde_json::to_string_pretty(config)
        .map_err(|e| RlError::CorruptTable(e.to_string()))?;
    fs::write(sidecar_path, sidecar + "\n")?;
    Ok(())
}

/// Load a table and its config back from [`save_qtable`] output.
pub fn load_qtable(
    csv_path: impl AsRef<Path>,
    sidecar_path: impl AsRef<Path>,
) -> Result<(QTable, RlConfig), RlError> {
    let config: RlConfig = serde_json::from_str(&fs::read_to_string(sidecar_path)?)
        .map_err(|e| RlError::CorruptTable(format!("sidecar: {e}")))?;
    config.validate()?;

    let mut table = QTable::new(config.lookback);
    let content = fs::read_to_string(csv_path)?;
    // leading # lines carry provenance comments
    let mut lines = content.lines().skip_while(|l| l.starts_with('#'));
    match lines.next() {
        Some("state,action,value,visits") => {}
        other => return Err(RlError::CorruptTable(format!("bad header {other:?}"))),
    }
    let mut rows = 0usize;
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let parse_err = |what: &str| RlError::CorruptTable(format!("row {}: bad {what}", i + 2));
        let state: usize =
            parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| parse_err("state"))?;
        let action: i8 =
            parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| parse_err("action"))?;
        let value: f64 =
            parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| parse_err("value"))?;
        let visits: u64 =
            parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| parse_err("visits"))?;
        let action = Action::from_signed(action).ok_or_else(|| parse_err("action"))?;
        if state >= table.n_state_codes() {
            return Err(parse_err("state"));
        }
        let slot = table.slot(state, action);
        table.values[slot] = value;
        table.visits[slot] = visits;
        rows += 1;
    }
    if rows != table.n_state_codes() * 3 {
        return Err(RlError::CorruptTable(format!(
            "expected {} rows, got {rows}",
            table.n_state_codes() * 3
        )));
    }
    Ok((table, config))
}
