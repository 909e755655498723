//! Model-free statistical arbitrage toolkit.
//!
//! The pipeline has three stages:
//!
//! 1. **Formation**: build a mean-reverting spread `X = Σ aᵢ Sᵢ` from aligned
//!    price series by minimizing its empirical mean reversion time
//!    ([`emrt`], [`spreadsearch`]).
//! 2. **Trading**: a tabular Q-learning agent trained on simulated
//!    Ornstein-Uhlenbeck spreads ([`oumodel`], [`rlagent`]), plus the classic
//!    distance-method and OU-calibration benchmarks ([`strategies`]).
//! 3. **Evaluation**: turn trade lists into wealth curves and performance
//!    metrics ([`backtest`]).
//!
//! All randomness is derived from a single master seed through named
//! sub-streams ([`seeding`]), so every run is reproducible bit for bit.

pub mod backtest;
pub mod emrt;
pub mod marketdata;
pub mod oumodel;
pub mod rlagent;
pub mod seeding;
pub mod spreadsearch;
pub mod strategies;
