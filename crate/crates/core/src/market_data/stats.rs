use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{MarketDataError, PriceSeries, Result, TRADING_DAYS};

/// Daily simple returns, dated by the later close of each pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub symbol: String,
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssetStats {
    pub mean_daily_return: f64,
    pub daily_volatility: f64,
    pub annual_volatility: f64,
}

/// Close prices on the dates shared by every input series.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedCloseMatrix {
    pub symbols: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// Row-major, `closes[date][symbol]`.
    pub closes: Vec<Vec<f64>>,
}

impl AlignedCloseMatrix {
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.closes.iter().map(|row| row[j]).collect()
    }
}

/// `returns[i] = close[i + 1] / close[i] - 1`.
pub fn daily_returns(series: &PriceSeries) -> Result<ReturnSeries> {
    if series.len() < 2 {
        return Err(MarketDataError::TooShort {
            symbol: series.symbol().to_string(),
            len: series.len(),
            need: 2,
        });
    }
    let bars = series.bars();
    Ok(ReturnSeries {
        symbol: series.symbol().to_string(),
        dates: bars[1..].iter().map(|b| b.date).collect(),
        returns: simple_returns(&series.closes()),
    })
}

pub(crate) fn simple_returns(closes: &[f64]) -> Vec<f64> {
    closes.windows(2).map(|w| w[1] / w[0] - 1.0).collect()
}

/// Mean and sample (n - 1) volatility, annualized by `sqrt(250)`.
pub fn asset_stats(returns: &ReturnSeries) -> Result<AssetStats> {
    let r = &returns.returns;
    if r.len() < 2 {
        return Err(MarketDataError::TooShort {
            symbol: returns.symbol.clone(),
            len: r.len(),
            need: 2,
        });
    }
    let n = r.len() as f64;
    let mean = r.iter().sum::<f64>() / n;
    let var = r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let daily = var.sqrt();
    Ok(AssetStats {
        mean_daily_return: mean,
        daily_volatility: daily,
        annual_volatility: daily * TRADING_DAYS.sqrt(),
    })
}

/// Restricts every series to their common dates. Columns follow input order.
pub fn align(series_list: &[PriceSeries]) -> Result<AlignedCloseMatrix> {
    let first = series_list.first().ok_or(MarketDataError::NoSeries)?;
    let mut common: BTreeSet<NaiveDate> = first.dates().into_iter().collect();
    for s in &series_list[1..] {
        let dates: BTreeSet<NaiveDate> = s.dates().into_iter().collect();
        common = common.intersection(&dates).copied().collect();
    }
    let symbols: Vec<String> = series_list.iter().map(|s| s.symbol().to_string()).collect();
    if common.is_empty() {
        return Err(MarketDataError::EmptyIntersection(symbols));
    }
    let dates: Vec<NaiveDate> = common.into_iter().collect();
    let mut closes = vec![Vec::with_capacity(series_list.len()); dates.len()];
    for s in series_list {
        // Both sides are sorted, so a merge walk picks out the common bars.
        let mut bars = s.bars().iter().peekable();
        for (row, date) in closes.iter_mut().zip(&dates) {
            while bars.peek().is_some_and(|b| b.date < *date) {
                bars.next();
            }
            let bar = bars.next().expect("common date present in every series");
            row.push(bar.close);
        }
    }
    Ok(AlignedCloseMatrix { symbols, dates, closes })
}
