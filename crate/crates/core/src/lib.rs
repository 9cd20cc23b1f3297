//! Sector portfolio toolkit: price ingestion and return statistics,
//! Monte-Carlo mean-variance frontiers, a univariate LSTM close-price
//! forecaster, and an actual-vs-predicted backtest ledger.

pub mod backtest;
pub mod forecaster;
pub mod market_data;
pub mod portfolio_opt;
