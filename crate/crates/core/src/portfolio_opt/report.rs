use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{max_sharpe_portfolio, min_variance_portfolio, FrontierCloud, FrontierPoint, Result};

/// One portfolio of the sector report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSummary {
    pub weights: IndexMap<String, f64>,
    pub annual_return: f64,
    pub annual_risk: f64,
    pub sharpe: f64,
    pub draw_index: usize,
}

impl From<&FrontierPoint> for PortfolioSummary {
    fn from(p: &FrontierPoint) -> Self {
        Self {
            weights: p.weights.iter().map(|(s, w)| (s.to_string(), w)).collect(),
            annual_return: p.annual_return,
            annual_risk: p.annual_risk,
            sharpe: p.sharpe,
            draw_index: p.draw_index,
        }
    }
}

/// Minimum-risk and optimum-risk (max Sharpe) portfolios of a sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioReport {
    pub sector: String,
    pub risk_free: f64,
    pub n_draws: usize,
    pub seed: u64,
    pub min_risk: PortfolioSummary,
    pub opt_risk: PortfolioSummary,
}

impl PortfolioReport {
    pub fn from_cloud(sector: &str, cloud: &FrontierCloud) -> Result<Self> {
        Ok(Self {
            sector: sector.to_string(),
            risk_free: cloud.risk_free,
            n_draws: cloud.n_draws,
            seed: cloud.seed,
            min_risk: min_variance_portfolio(cloud)?.into(),
            opt_risk: max_sharpe_portfolio(cloud)?.into(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Frontier export: `draw_index,risk,return,sharpe,w_<SYM>...`.
pub fn frontier_csv(cloud: &FrontierCloud) -> String {
    let mut out = String::from("draw_index,risk,return,sharpe");
    if let Some(first) = cloud.points.first() {
        for s in first.weights.symbols() {
            out.push_str(",w_");
            out.push_str(s);
        }
    }
    out.push('\n');
    for p in &cloud.points {
        out.push_str(&format!("{},{},{},{}", p.draw_index, p.annual_risk, p.annual_return, p.sharpe));
        for w in p.weights.weights() {
            out.push(',');
            out.push_str(&fixed_significant(*w, 12));
        }
        out.push('\n');
    }
    out
}

/// Fixed-point rendering with at least `digits` significant digits.
pub(crate) fn fixed_significant(x: f64, digits: i32) -> String {
    let decimals = if x == 0.0 || !x.is_finite() {
        digits - 1
    } else {
        (digits - 1 - x.abs().log10().floor() as i32).max(0)
    };
    format!("{x:.prec$}", prec = decimals as usize)
}
