//! Mean-variance statistics, the Monte-Carlo frontier cloud and the
//! minimum-variance / maximum-Sharpe selectors.

mod frontier;
mod oracle;
mod report;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::{AlignedCloseMatrix, TRADING_DAYS};

pub use frontier::{
    build_frontier, max_sharpe_portfolio, min_variance_portfolio, random_weights, FrontierCloud, FrontierPoint,
};
pub use oracle::analytic_min_variance;
pub use report::{frontier_csv, PortfolioReport, PortfolioSummary};

/// Default annual risk-free rate.
pub const DEFAULT_RISK_FREE: f64 = 0.01;
/// Default number of random portfolios in a frontier cloud.
pub const DEFAULT_DRAWS: usize = 10_000;

const WEIGHT_SUM_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PortfolioError {
    #[error("need at least {need} aligned dates, got {got}")]
    TooFewDates { got: usize, need: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("portfolio needs at least one asset")]
    NoAssets,
    #[error("n_draws must be at least 1")]
    NoDraws,
    #[error("annual risk must be positive, got {0}")]
    NonPositiveRisk(f64),
    #[error("frontier cloud is empty")]
    EmptyCloud,
    #[error("covariance matrix is singular")]
    Singular,
    #[error("unconstrained minimum-variance weight for {symbol} is negative ({weight})")]
    NegativeWeight { symbol: String, weight: f64 },
}

pub type Result<T> = std::result::Result<T, PortfolioError>;

/// Symmetric positive semidefinite matrix of annualized return covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    symbols: Vec<String>,
    entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    pub fn new(symbols: Vec<String>, entries: DMatrix<f64>) -> Result<Self> {
        let n = symbols.len();
        if n == 0 {
            return Err(PortfolioError::NoAssets);
        }
        if entries.nrows() != n || entries.ncols() != n {
            return Err(PortfolioError::Dimension(format!(
                "{n} symbols but a {}x{} matrix",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(PortfolioError::InvalidCovariance("non-finite entry".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if (entries[(i, j)] - entries[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(PortfolioError::InvalidCovariance(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        let sym = (&entries + entries.transpose()) * 0.5;
        let min_eig = sym.symmetric_eigenvalues().min();
        if min_eig < -PSD_TOL {
            return Err(PortfolioError::InvalidCovariance(format!("eigenvalue {min_eig} below zero")));
        }
        Ok(Self { symbols, entries })
    }

    /// Builds from row vectors.
    pub fn from_rows(symbols: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(PortfolioError::Dimension("covariance rows must be square".into()));
        }
        let entries = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(symbols, entries)
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// `wᵀ Σ w`, accumulated row by row.
    pub fn quadratic_form(&self, w: &[f64]) -> f64 {
        let n = self.len();
        let mut total = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.entries[(i, j)] * w[j];
            }
            total += w[i] * row;
        }
        total
    }
}

/// Long-only allocation fractions summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioWeights {
    symbols: Vec<String>,
    weights: Vec<f64>,
}

impl PortfolioWeights {
    pub fn new(symbols: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if symbols.len() != weights.len() {
            return Err(PortfolioError::Dimension(format!(
                "{} symbols, {} weights",
                symbols.len(),
                weights.len()
            )));
        }
        if symbols.is_empty() {
            return Err(PortfolioError::NoAssets);
        }
        if let Some((s, w)) = symbols.iter().zip(&weights).find(|(_, w)| !(**w >= 0.0) || !w.is_finite()) {
            return Err(PortfolioError::InvalidWeights(format!("{s} has weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(PortfolioError::InvalidWeights(format!("weights sum to {sum}")));
        }
        Ok(Self { symbols, weights })
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, symbol: &str) -> Option<f64> {
        self.symbols.iter().position(|s| s == symbol).map(|i| self.weights[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.symbols.iter().map(String::as_str).zip(self.weights.iter().copied())
    }
}

/// Annualized mean returns and covariance from aligned closes.
///
/// Daily simple returns per column; mean and sample covariance are scaled
/// by 250 trading days.
pub fn mean_and_covariance(aligned: &AlignedCloseMatrix) -> Result<(Vec<f64>, CovarianceMatrix)> {
    let t = aligned.dates.len();
    if t < 3 {
        return Err(PortfolioError::TooFewDates { got: t, need: 3 });
    }
    let n = aligned.symbols.len();
    let returns: Vec<Vec<f64>> =
        (0..n).map(|j| crate::market_data::stats_returns(&aligned.column(j))).collect();
    let m = (t - 1) as f64;
    let means: Vec<f64> = returns.iter().map(|r| r.iter().sum::<f64>() / m).collect();
    let mut cov = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let c = returns[i]
                .iter()
                .zip(&returns[j])
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .sum::<f64>()
                / (m - 1.0)
                * TRADING_DAYS;
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    let annual_mean = means.iter().map(|x| x * TRADING_DAYS).collect();
    Ok((annual_mean, CovarianceMatrix::new(aligned.symbols.clone(), cov)?))
}

/// Annual return `wᵀμ` and annual risk `sqrt(wᵀΣw)`.
pub fn portfolio_stats(weights: &PortfolioWeights, mean: &[f64], cov: &CovarianceMatrix) -> Result<(f64, f64)> {
    stats_raw(weights.weights(), mean, cov)
}

pub(crate) fn stats_raw(w: &[f64], mean: &[f64], cov: &CovarianceMatrix) -> Result<(f64, f64)> {
    if w.len() != mean.len() || w.len() != cov.len() {
        return Err(PortfolioError::Dimension(format!(
            "{} weights, {} means, {}x{} covariance",
            w.len(),
            mean.len(),
            cov.len(),
            cov.len()
        )));
    }
    let ret: f64 = w.iter().zip(mean).map(|(a, b)| a * b).sum();
    let var = cov.quadratic_form(w);
    if var < -PSD_TOL {
        return Err(PortfolioError::InvalidCovariance(format!("negative portfolio variance {var}")));
    }
    Ok((ret, var.max(0.0).sqrt()))
}

/// `(annual_return - risk_free) / annual_risk`.
pub fn sharpe_ratio(annual_return: f64, annual_risk: f64, risk_free: f64) -> Result<f64> {
    if !(annual_risk > 0.0) {
        return Err(PortfolioError::NonPositiveRisk(annual_risk));
    }
    Ok((annual_return - risk_free) / annual_risk)
}
