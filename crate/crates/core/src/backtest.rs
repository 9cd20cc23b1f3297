//! Buy-and-hold ledger for a fictitious investor: allocate capital by
//! portfolio weights at the start date, value the holdings at the end date
//! under actual and predicted prices, and report the ROI pair.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::portfolio_opt::PortfolioWeights;

/// Prices keyed by symbol.
pub type Prices = IndexMap<String, f64>;

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("no {kind} price for {symbol}")]
    MissingPrice { kind: &'static str, symbol: String },
    #[error("{kind} price for {symbol} must be positive, got {price}")]
    NonPositivePrice { kind: &'static str, symbol: String, price: f64 },
    #[error("capital must be positive, got {0}")]
    NonPositiveCapital(f64),
    #[error("invalid amount {amount} for {symbol}")]
    InvalidAmount { symbol: String, amount: f64 },
}

pub type Result<T> = std::result::Result<T, BacktestError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub symbol: String,
    pub amount_invested: f64,
    pub buy_price: f64,
    pub shares: f64,
}

/// Invests `capital × weight` per symbol, rounded to whole currency units.
/// Shares are fractional and unrounded.
pub fn allocate(capital: f64, weights: &PortfolioWeights, start_prices: &Prices) -> Result<Vec<Allocation>> {
    if !(capital > 0.0) {
        return Err(BacktestError::NonPositiveCapital(capital));
    }
    let amounts: Vec<(String, f64)> =
        weights.iter().map(|(s, w)| (s.to_string(), round_half_away(capital * w))).collect();
    allocate_amounts(&amounts, start_prices)
}

/// Builds allocations from explicit invested amounts.
pub fn allocate_amounts(amounts: &[(String, f64)], start_prices: &Prices) -> Result<Vec<Allocation>> {
    amounts
        .iter()
        .map(|(symbol, amount)| {
            if !(*amount >= 0.0) || !amount.is_finite() {
                return Err(BacktestError::InvalidAmount { symbol: symbol.clone(), amount: *amount });
            }
            let buy_price = price_of(start_prices, symbol, "start")?;
            Ok(Allocation { symbol: symbol.clone(), amount_invested: *amount, buy_price, shares: amount / buy_price })
        })
        .collect()
}

/// Per-symbol `shares × price` and their sum in allocation order.
pub fn value_portfolio(allocs: &[Allocation], prices: &Prices) -> Result<(Prices, f64)> {
    let mut values = Prices::with_capacity(allocs.len());
    let mut total = 0.0;
    for a in allocs {
        let price = prices.get(&a.symbol).copied().ok_or_else(|| BacktestError::MissingPrice {
            kind: "valuation",
            symbol: a.symbol.clone(),
        })?;
        let v = a.shares * price;
        total += v;
        values.insert(a.symbol.clone(), v);
    }
    Ok((values, total))
}

/// Percentage return on capital.
pub fn roi(capital: f64, end_value: f64) -> Result<f64> {
    if !(capital > 0.0) {
        return Err(BacktestError::NonPositiveCapital(capital));
    }
    Ok((end_value - capital) / capital * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub symbol: String,
    pub amount_invested: f64,
    pub buy_price: f64,
    pub shares: f64,
    pub actual_price: f64,
    pub actual_value: f64,
    pub predicted_price: f64,
    pub predicted_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestLedger {
    pub capital: f64,
    pub rows: Vec<LedgerRow>,
    pub total_invested: f64,
    /// `capital - total_invested`, left uninvested.
    pub rounding_residual: f64,
    pub total_actual: f64,
    pub total_predicted: f64,
    pub roi_actual: f64,
    pub roi_predicted: f64,
}

pub fn run_backtest(
    capital: f64,
    weights: &PortfolioWeights,
    start_prices: &Prices,
    end_actual_prices: &Prices,
    end_predicted_prices: &Prices,
) -> Result<BacktestLedger> {
    let allocs = allocate(capital, weights, start_prices)?;
    ledger_from_allocations(capital, allocs, end_actual_prices, end_predicted_prices)
}

/// Values pre-built allocations; ROI is measured against `capital`.
pub fn ledger_from_allocations(
    capital: f64,
    allocs: Vec<Allocation>,
    end_actual_prices: &Prices,
    end_predicted_prices: &Prices,
) -> Result<BacktestLedger> {
    if !(capital > 0.0) {
        return Err(BacktestError::NonPositiveCapital(capital));
    }
    for a in &allocs {
        price_of(end_actual_prices, &a.symbol, "actual end")?;
        price_of(end_predicted_prices, &a.symbol, "predicted end")?;
    }
    let (actual, total_actual) = value_portfolio(&allocs, end_actual_prices)?;
    let (predicted, total_predicted) = value_portfolio(&allocs, end_predicted_prices)?;
    let total_invested: f64 = allocs.iter().map(|a| a.amount_invested).sum();
    let rows = allocs
        .into_iter()
        .map(|a| LedgerRow {
            actual_price: end_actual_prices[&a.symbol],
            actual_value: actual[&a.symbol],
            predicted_price: end_predicted_prices[&a.symbol],
            predicted_value: predicted[&a.symbol],
            symbol: a.symbol,
            amount_invested: a.amount_invested,
            buy_price: a.buy_price,
            shares: a.shares,
        })
        .collect();
    Ok(BacktestLedger {
        capital,
        rows,
        total_invested,
        rounding_residual: capital - total_invested,
        total_actual,
        total_predicted,
        roi_actual: roi(capital, total_actual)?,
        roi_predicted: roi(capital, total_predicted)?,
    })
}

impl BacktestLedger {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("ledger serializes");
        s.push('\n');
        s
    }

    /// Display table with whole currency units and two-decimal share counts.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "symbol,amount_invested,buy_price,shares,actual_price,actual_value,predicted_price,predicted_value\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.2},{},{},{},{}\n",
                r.symbol,
                display_units(r.amount_invested),
                display_price(r.buy_price),
                round_to(r.shares, 2),
                display_price(r.actual_price),
                display_units(r.actual_value),
                display_price(r.predicted_price),
                display_units(r.predicted_value),
            ));
        }
        out.push_str(&format!(
            "Total,{},,,,{},,{}\n",
            display_units(self.total_invested),
            display_units(self.total_actual),
            display_units(self.total_predicted)
        ));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sector: String,
    pub predicted_return_pct: f64,
    pub actual_return_pct: f64,
}

pub const SUMMARY_HEADER: &str = "sector,predicted_return_pct,actual_return_pct";

/// One row per sector ledger, in input order.
pub fn summarize<S: AsRef<str>>(ledgers: &[(S, BacktestLedger)]) -> Vec<SummaryRow> {
    ledgers
        .iter()
        .map(|(sector, l)| SummaryRow {
            sector: sector.as_ref().to_string(),
            predicted_return_pct: l.roi_predicted,
            actual_return_pct: l.roi_actual,
        })
        .collect()
}

impl SummaryRow {
    pub fn csv_line(&self) -> String {
        format!("{},{:.2},{:.2}", self.sector, round_to(self.predicted_return_pct, 2), round_to(self.actual_return_pct, 2))
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// Replaces the row for `row.sector` in an existing summary CSV, or appends
/// it. Re-running a sector therefore leaves the file unchanged.
pub fn upsert_summary(existing: &str, row: &SummaryRow) -> String {
    let mut lines: Vec<String> = existing
        .lines()
        .skip_while(|l| *l == SUMMARY_HEADER)
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect();
    let prefix = format!("{},", row.sector);
    match lines.iter().position(|l| l.starts_with(&prefix)) {
        Some(i) => lines[i] = row.csv_line(),
        None => lines.push(row.csv_line()),
    }
    let mut out = format!("{SUMMARY_HEADER}\n");
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

fn price_of(prices: &Prices, symbol: &str, kind: &'static str) -> Result<f64> {
    let price = *prices
        .get(symbol)
        .ok_or_else(|| BacktestError::MissingPrice { kind, symbol: symbol.to_string() })?;
    if !(price > 0.0) || !price.is_finite() {
        return Err(BacktestError::NonPositivePrice { kind, symbol: symbol.to_string(), price });
    }
    Ok(price)
}

/// `f64::round` already rounds half away from zero.
pub fn round_half_away(x: f64) -> f64 {
    x.round()
}

pub fn round_to(x: f64, decimals: i32) -> f64 {
    let k = 10f64.powi(decimals);
    (x * k).round() / k
}

fn display_units(x: f64) -> String {
    // Avoid printing "-0".
    format!("{}", round_half_away(x) + 0.0)
}

fn display_price(x: f64) -> String {
    format!("{:.2}", round_to(x, 2))
}
