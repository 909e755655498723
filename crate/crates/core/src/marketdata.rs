//! Price ingestion, validation, and alignment.
//!
//! CSV input is one file per ticker with header `date,close`, ISO-8601
//! dates, decimal-point closes. Files are validated strictly: malformed or
//! non-positive rows are rejected, not skipped. After alignment all time
//! quantities downstream are in trading-day indices (0, 1, 2, ...).

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("missing file: {0}")]
    MissingFile(String),
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: non-positive price")]
    NonPositivePrice { line: usize },
    #[error("series is empty")]
    EmptySeries,
    #[error("no common dates across input series")]
    EmptyIntersection,
    #[error("coefficient length {got} does not match asset count {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Plain ordered series of real values, the working currency of the
/// statistical modules. `origin` is a free-form label carried through
/// outputs for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub values: Vec<f64>,
    pub origin: Option<String>,
}

impl Series {
    pub fn new(values: Vec<f64>) -> Self {
        Series { values, origin: None }
    }

    pub fn with_origin(values: Vec<f64>, origin: impl Into<String>) -> Self {
        Series { values, origin: Some(origin.into()) }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return f64::NAN;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sample standard deviation (n-1 denominator).
    pub fn sample_std(&self) -> f64 {
        sample_std(&self.values)
    }
}

/// Sample standard deviation with the n-1 denominator; 0 for fewer than
/// two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Daily close series for one ticker, dated, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub ticker: String,
    pub dates: Vec<NaiveDate>,
    pub closes: Vec<f64>,
}

impl PriceSeries {
    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }

    pub fn to_series(&self) -> Series {
        Series::with_origin(self.closes.clone(), self.ticker.clone())
    }
}

/// Date-aligned multi-asset close-price matrix. Row = date, column = asset.
///
/// Invariants: dates strictly increasing, all prices strictly positive,
/// every row has one price per ticker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePanel {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    pub prices: Vec<Vec<f64>>,
}

impl PricePanel {
    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    /// Column `asset` as a Series labeled with its ticker.
    pub fn column(&self, asset: usize) -> Series {
        Series::with_origin(
            self.prices.iter().map(|row| row[asset]).collect(),
            self.tickers[asset].clone(),
        )
    }
}

/// Result of [`align`]: the inner-joined panel plus how many dates each
/// input lost to the join.
#[derive(Debug, Clone)]
pub struct Alignment {
    pub panel: PricePanel,
    /// (ticker, dropped date count), in input order.
    pub dropped: Vec<(String, usize)>,
}

/// Load one ticker's `date,close` CSV. Rows are sorted ascending by date;
/// duplicate dates, unparsable fields, and non-positive closes are errors.
pub fn load_price_csv(path: impl AsRef<Path>, ticker: &str) -> Result<PriceSeries, MarketDataError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(MarketDataError::MissingFile(path.display().to_string()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| MarketDataError::MalformedRow { line: 1, reason: e.to_string() })?;

    let headers = reader
        .headers()
        .map_err(|e| MarketDataError::MalformedRow { line: 1, reason: e.to_string() })?;
    let fields: Vec<&str> = headers.iter().map(|h| h.trim()).collect();
    if fields != ["date", "close"] {
        return Err(MarketDataError::MalformedRow {
            line: 1,
            reason: format!("expected header `date,close`, got `{}`", fields.join(",")),
        });
    }

    // line 1 is the header; data rows start at 2
    let mut rows: Vec<(NaiveDate, f64, usize)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record
            .map_err(|e| MarketDataError::MalformedRow { line, reason: e.to_string() })?;
        if record.len() != 2 {
            return Err(MarketDataError::MalformedRow {
                line,
                reason: format!("expected 2 fields, got {}", record.len()),
            });
        }
        let date = NaiveDate::parse_from_str(record[0].trim(), "%Y-%m-%d").map_err(|e| {
            MarketDataError::MalformedRow { line, reason: format!("bad date `{}`: {e}", &record[0]) }
        })?;
        let close: f64 = record[1].trim().parse().map_err(|e| {
            MarketDataError::MalformedRow { line, reason: format!("bad close `{}`: {e}", &record[1]) }
        })?;
        if !close.is_finite() || close <= 0.0 {
            return Err(MarketDataError::NonPositivePrice { line });
        }
        rows.push((date, close, line));
    }
    if rows.is_empty() {
        return Err(MarketDataError::EmptySeries);
    }

    rows.sort_by_key(|r| r.0);
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(MarketDataError::MalformedRow {
                line: w[1].2,
                reason: format!("duplicate date {}", w[1].0),
            });
        }
    }

    Ok(PriceSeries {
        ticker: ticker.to_string(),
        dates: rows.iter().map(|r| r.0).collect(),
        closes: rows.iter().map(|r| r.1).collect(),
    })
}

/// Inner-join the inputs on dates. Dates missing from any series are
/// dropped; the per-ticker drop counts are reported alongside the panel.
pub fn align(inputs: &[PriceSeries]) -> Result<Alignment, MarketDataError> {
    if inputs.is_empty() {
        return Err(MarketDataError::EmptySeries);
    }

    let mut common: Vec<NaiveDate> = inputs[0].dates.clone();
    for series in &inputs[1..] {
        let other: std::collections::HashSet<NaiveDate> = series.dates.iter().copied().collect();
        common.retain(|d| other.contains(d));
    }
    if common.is_empty() {
        return Err(MarketDataError::EmptyIntersection);
    }

    let mut dropped = Vec::with_capacity(inputs.len());
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(inputs.len());
    for series in inputs {
        let keep: std::collections::HashSet<NaiveDate> = common.iter().copied().collect();
        let col: Vec<f64> = series
            .dates
            .iter()
            .zip(&series.closes)
            .filter(|(d, _)| keep.contains(d))
            .map(|(_, c)| *c)
            .collect();
        dropped.push((series.ticker.clone(), series.len() - col.len()));
        columns.push(col);
    }

    let prices: Vec<Vec<f64>> = (0..common.len())
        .map(|row| columns.iter().map(|col| col[row]).collect())
        .collect();

    Ok(Alignment {
        panel: PricePanel {
            dates: common,
            tickers: inputs.iter().map(|s| s.ticker.clone()).collect(),
            prices,
        },
        dropped,
    })
}

/// Divide a series by its first value, so output[0] = 1.
pub fn normalize_first(series: &Series) -> Result<Series, MarketDataError> {
    let first = *series.values.first().ok_or(MarketDataError::EmptySeries)?;
    if !(first > 0.0) {
        return Err(MarketDataError::NonPositivePrice { line: 0 });
    }
    Ok(Series {
        values: series.values.iter().map(|v| v / first).collect(),
        origin: series.origin.clone(),
    })
}

/// Pointwise linear combination of the panel's columns: X_t = Σ aᵢ Sᵢ(t).
pub fn combine(panel: &PricePanel, coefficients: &[f64]) -> Result<Series, MarketDataError> {
    if coefficients.len() != panel.n_assets() {
        return Err(MarketDataError::DimensionMismatch {
            expected: panel.n_assets(),
            got: coefficients.len(),
        });
    }
    let values = panel
        .prices
        .iter()
        .map(|row| row.iter().zip(coefficients).map(|(p, a)| p * a).sum())
        .collect();
    Ok(Series::new(values))
}
