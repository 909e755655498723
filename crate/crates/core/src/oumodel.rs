//! Ornstein-Uhlenbeck simulation and maximum-likelihood calibration.
//!
//! The process dX_t = μ(θ − X_t)dt + σ dW_t is simulated with its exact
//! transition (no discretization bias) and calibrated through the AR(1)
//! closed form of the exact-discretization Gaussian likelihood.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::marketdata::Series;
use crate::seeding::{stream, StreamKind};

#[derive(Debug, Error)]
pub enum OuError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("series is constant; cannot calibrate")]
    DegenerateSeries,
    #[error("fitted AR(1) slope {b} outside (0, 1); series is not mean-reverting")]
    NonMeanReverting { b: f64 },
    #[error("series too short: {got} points, need at least {need}")]
    TooShort { got: usize, need: usize },
}

/// OU parameters. Time units are whatever the caller's grid uses
/// (trading days for daily data, fractions of T for simulations).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    /// Mean-reversion speed, > 0.
    pub mu: f64,
    /// Long-term mean.
    pub theta: f64,
    /// Volatility, ≥ 0.
    pub sigma: f64,
}

impl OuParams {
    pub fn new(mu: f64, theta: f64, sigma: f64) -> Result<Self, OuError> {
        let p = OuParams { mu, theta, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), OuError> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(OuError::InvalidParams(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(OuError::InvalidParams(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !self.theta.is_finite() {
            return Err(OuError::InvalidParams(format!("theta must be finite, got {}", self.theta)));
        }
        Ok(())
    }

    /// Stationary variance σ²/(2μ).
    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.mu)
    }
}

/// Equilibrium standard deviation σ/√(2μ) of the OU stationary law.
pub fn sigma_eq(params: &OuParams) -> Result<f64, OuError> {
    params.validate()?;
    Ok(params.sigma / (2.0 * params.mu).sqrt())
}

/// One simulation run: parameters, start value, horizon, grid size, seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: OuParams,
    pub x0: f64,
    /// Terminal time T; the grid spans [0, T] with n_steps points.
    pub horizon: f64,
    pub n_steps: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), OuError> {
        self.params.validate()?;
        if !(self.horizon > 0.0) {
            return Err(OuError::InvalidParams(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if self.n_steps < 2 {
            return Err(OuError::InvalidParams(format!("n_steps must be >= 2, got {}", self.n_steps)));
        }
        Ok(())
    }

    /// Grid spacing Δ = T/(n_steps − 1).
    pub fn dt(&self) -> f64 {
        self.horizon / (self.n_steps - 1) as f64
    }
}

/// Simulate one path with the exact OU transition:
///
/// X_{t+Δ} = θ + (X_t − θ)·e^{−μΔ} + ε,  ε ~ N(0, σ²(1 − e^{−2μΔ})/(2μ)).
///
/// Deterministic given the seed; equivalent to `simulate_ou_path(config, 0)`.
pub fn simulate_ou(config: &SimConfig) -> Result<Series, OuError> {
    simulate_ou_path(config, 0)
}

/// Simulate path `path_index` of an ensemble. Each index owns an
/// independent RNG stream of the config seed, so paths can be generated
/// in any order (or in parallel) without changing their draws.
pub fn simulate_ou_path(config: &SimConfig, path_index: u64) -> Result<Series, OuError> {
    config.validate()?;
    let mut rng = stream(config.seed, StreamKind::SimPath, path_index);
    Ok(simulate_ou_with(config, &mut rng))
}

pub(crate) fn simulate_ou_with(config: &SimConfig, rng: &mut impl Rng) -> Series {
    let OuParams { mu, theta, sigma } = config.params;
    let dt = config.dt();
    let decay = (-mu * dt).exp();
    let step_sd = (sigma * sigma * (1.0 - (-2.0 * mu * dt).exp()) / (2.0 * mu)).sqrt();

    let mut values = Vec::with_capacity(config.n_steps);
    let mut x = config.x0;
    values.push(x);
    for _ in 1..config.n_steps {
        let eps: f64 = rng.sample(StandardNormal);
        x = theta + (x - theta) * decay + step_sd * eps;
        values.push(x);
    }
    Series::new(values)
}

/// Calibration output: the parameters, the attained average log-likelihood
/// per transition, and the underlying AR(1) coefficients for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuFit {
    pub params: OuParams,
    /// Mean Gaussian log-density over the observed transitions.
    pub avg_log_likelihood: f64,
    /// AR(1) intercept a in x_{t+1} = a + b·x_t + e.
    pub ar_intercept: f64,
    /// AR(1) slope b = e^{−μ·dt}.
    pub ar_slope: f64,
}

/// Maximum-likelihood OU fit via the AR(1) closed form.
///
/// Least squares on x_{t+1} = a + b·x_t + e is the conditional MLE of the
/// exact discretization; the parameters map back as μ = −ln(b)/dt,
/// θ = a/(1 − b), σ² = Var(e)·2μ/(1 − b²).
pub fn fit_ou_mle(series: &Series, dt: f64) -> Result<OuFit, OuError> {
    if series.len() < 10 {
        return Err(OuError::TooShort { got: series.len(), need: 10 });
    }
    if !(dt > 0.0) {
        return Err(OuError::InvalidParams(format!("dt must be > 0, got {dt}")));
    }
    let v = &series.values;
    let m = v.len() - 1;
    let x = &v[..m];
    let y = &v[1..];

    let x_mean = x.iter().sum::<f64>() / m as f64;
    let y_mean = y.iter().sum::<f64>() / m as f64;
    let sxx: f64 = x.iter().map(|xi| (xi - x_mean) * (xi - x_mean)).sum();
    if sxx == 0.0 {
        return Err(OuError::DegenerateSeries);
    }
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - x_mean) * (yi - y_mean)).sum();

    let b = sxy / sxx;
    let a = y_mean - b * x_mean;
    if b >= 1.0 || b <= 0.0 {
        return Err(OuError::NonMeanReverting { b });
    }

    // ML residual variance (1/m, no df correction).
    let resid_var = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let e = yi - (a + b * xi);
            e * e
        })
        .sum::<f64>()
        / m as f64;

    let mu = -b.ln() / dt;
    let theta = a / (1.0 - b);
    let sigma = (resid_var * 2.0 * mu / (1.0 - b * b)).sqrt();

    // Guard against ln(0) on exactly-AR(1) data: floor the variance used in
    // the density so a perfect fit scores a large finite likelihood.
    let var_for_ll = resid_var.max(f64::MIN_POSITIVE);
    let avg_log_likelihood =
        -0.5 * ((2.0 * std::f64::consts::PI * var_for_ll).ln() + resid_var / var_for_ll);

    Ok(OuFit { params: OuParams { mu, theta, sigma }, avg_log_likelihood, ar_intercept: a, ar_slope: b })
}
