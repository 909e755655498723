//! Empirical mean reversion time.
//!
//! An *important extreme* is a local minimum (maximum) whose surrounding
//! segment endpoints sit at least C·s above (below) it, s being the sample
//! standard deviation. The τ-sequence alternates important extremes with
//! the first subsequent crossings of a reference mean, and the EMRT is the
//! average extreme-to-crossing duration, in sample steps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::marketdata::Series;

#[derive(Debug, Error)]
pub enum EmrtError {
    #[error("series is degenerate (length < 3 or zero sample std)")]
    DegenerateSeries,
    #[error("no important extremes found")]
    NoExtremes,
    #[error("no complete extreme-to-crossing pair")]
    NoCompletePairs,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremeKind {
    Minimum,
    Maximum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremePoint {
    pub index: usize,
    pub kind: ExtremeKind,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauKind {
    Extreme,
    Crossing,
}

/// Alternating event times: odd entries are important extremes, even
/// entries the first subsequent crossings of `reference_mean`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSequence {
    pub taus: Vec<usize>,
    pub kinds: Vec<TauKind>,
    pub reference_mean: f64,
}

impl TauSequence {
    /// Complete (extreme, crossing) index pairs; a trailing unmatched
    /// extreme is excluded.
    pub fn complete_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.taus.chunks_exact(2).map(|c| (c[0], c[1]))
    }
}

/// Which mean the crossings target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMean {
    /// Sample mean of the analysis window (the default).
    SampleMean,
    /// Externally known mean, e.g. the true θ of a simulated process.
    Value(f64),
}

/// Which extreme kinds seed the τ-sequence. `Both` treats maxima and
/// minima symmetrically; `MaximaOnly` is the literal recursive definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtremeSelection {
    Both,
    MaximaOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmrtConfig {
    /// Threshold C, a dimensionless multiple of the sample std.
    pub c_threshold: f64,
    pub reference_mean: ReferenceMean,
    pub extremes: ExtremeSelection,
}

impl Default for EmrtConfig {
    fn default() -> Self {
        EmrtConfig {
            c_threshold: 2.0,
            reference_mean: ReferenceMean::SampleMean,
            extremes: ExtremeSelection::Both,
        }
    }
}

impl EmrtConfig {
    pub fn with_c(c_threshold: f64) -> Self {
        EmrtConfig { c_threshold, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), EmrtError> {
        if !(self.c_threshold > 0.0) {
            return Err(EmrtError::InvalidConfig(format!(
                "c_threshold must be > 0, got {}",
                self.c_threshold
            )));
        }
        Ok(())
    }

    fn resolve_mean(&self, series: &Series) -> f64 {
        match self.reference_mean {
            ReferenceMean::SampleMean => series.mean(),
            ReferenceMean::Value(v) => v,
        }
    }
}

/// Find all important extremes: points m such that witnesses i ≤ m ≤ j
/// exist with X_m extremal on [i, j] and both endpoint gaps ≥ C·s.
///
/// Single left-to-right scan. A phase hunts one extreme kind, tracking the
/// running candidate; when the opposite-direction gap reaches C·s the
/// candidate is confirmed and the phase flips. The first turning point is
/// never emitted (its back-side gap is < C·s, else the opposite fire would
/// have come first), and neither is the candidate left open at the end.
pub fn find_important_extremes(series: &Series, c: f64) -> Result<Vec<ExtremePoint>, EmrtError> {
    if series.len() < 3 {
        return Err(EmrtError::DegenerateSeries);
    }
    if !(c > 0.0) {
        return Err(EmrtError::InvalidConfig(format!("C must be > 0, got {c}")));
    }
    let s = series.sample_std();
    if s == 0.0 || !s.is_finite() {
        return Err(EmrtError::DegenerateSeries);
    }
    let r = c * s;
    let x = &series.values;

    enum Phase {
        Either { min_idx: usize, max_idx: usize },
        HuntingMax { cand: usize },
        HuntingMin { cand: usize },
    }

    let mut out = Vec::new();
    let mut phase = Phase::Either { min_idx: 0, max_idx: 0 };
    for t in 1..x.len() {
        phase = match phase {
            Phase::Either { mut min_idx, mut max_idx } => {
                if x[t] < x[min_idx] {
                    min_idx = t;
                }
                if x[t] > x[max_idx] {
                    max_idx = t;
                }
                if x[t] - x[min_idx] >= r {
                    // first turning point: min at min_idx, not important
                    Phase::HuntingMax { cand: t }
                } else if x[max_idx] - x[t] >= r {
                    Phase::HuntingMin { cand: t }
                } else {
                    Phase::Either { min_idx, max_idx }
                }
            }
            Phase::HuntingMax { mut cand } => {
                if x[t] > x[cand] {
                    cand = t;
                    Phase::HuntingMax { cand }
                } else if x[cand] - x[t] >= r {
                    out.push(ExtremePoint { index: cand, kind: ExtremeKind::Maximum, value: x[cand] });
                    Phase::HuntingMin { cand: t }
                } else {
                    Phase::HuntingMax { cand }
                }
            }
            Phase::HuntingMin { mut cand } => {
                if x[t] < x[cand] {
                    cand = t;
                    Phase::HuntingMin { cand }
                } else if x[t] - x[cand] >= r {
                    out.push(ExtremePoint { index: cand, kind: ExtremeKind::Minimum, value: x[cand] });
                    Phase::HuntingMax { cand: t }
                } else {
                    Phase::HuntingMin { cand }
                }
            }
        };
    }
    Ok(out)
}

/// Build the alternating extreme/crossing event sequence.
///
/// τ₁ is the first important extreme; each even τ is the first crossing of
/// the reference mean after the previous extreme (sign change of X − θ̂,
/// later index reported); each later odd τ is the first important extreme
/// after the previous crossing. A final extreme with no crossing after it
/// stays in the sequence but pairs with nothing.
pub fn build_tau_sequence(series: &Series, config: &EmrtConfig) -> Result<TauSequence, EmrtError> {
    config.validate()?;
    let mut extremes = find_important_extremes(series, config.c_threshold)?;
    if config.extremes == ExtremeSelection::MaximaOnly {
        extremes.retain(|e| e.kind == ExtremeKind::Maximum);
    }
    if extremes.is_empty() {
        return Err(EmrtError::NoExtremes);
    }
    let theta = config.resolve_mean(series);
    let x = &series.values;

    let mut taus = Vec::new();
    let mut kinds = Vec::new();
    let mut ext_iter = extremes.iter().peekable();
    let mut cursor: Option<usize> = None; // last event index

    loop {
        // next extreme strictly after the cursor
        let ext = loop {
            match ext_iter.peek() {
                Some(e) if cursor.is_some_and(|c| e.index <= c) => {
                    ext_iter.next();
                }
                other => break other.copied(),
            }
        };
        let Some(ext) = ext else { break };
        taus.push(ext.index);
        kinds.push(TauKind::Extreme);

        // first sign change of (X − θ̂) after the extreme
        let crossing = (ext.index + 1..x.len())
            .find(|&t| (x[t - 1] - theta) * (x[t] - theta) <= 0.0);
        let Some(t) = crossing else { break };
        taus.push(t);
        kinds.push(TauKind::Crossing);
        cursor = Some(t);
    }

    Ok(TauSequence { taus, kinds, reference_mean: theta })
}

/// Average extreme-to-crossing duration over the complete pairs of the
/// τ-sequence, in sample steps.
pub fn compute_emrt(series: &Series, config: &EmrtConfig) -> Result<f64, EmrtError> {
    let taus = build_tau_sequence(series, config)?;
    emrt_of_taus(&taus)
}

/// EMRT of an already-built τ-sequence.
pub fn emrt_of_taus(taus: &TauSequence) -> Result<f64, EmrtError> {
    let mut n_pairs = 0usize;
    let mut total = 0usize;
    for (ext, cross) in taus.complete_pairs() {
        total += cross - ext;
        n_pairs += 1;
    }
    if n_pairs == 0 {
        return Err(EmrtError::NoCompletePairs);
    }
    Ok(total as f64 / n_pairs as f64)
}
