//! Daily price ingestion, validation, date alignment and return statistics.
//!
//! Only the `close` column feeds the downstream analytics; the remaining
//! OHLCV fields are validated and kept on the bars.

mod csv_io;
mod fetch;
mod stats;
mod universe;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_io::{parse_csv, parse_csv_with, serialize_csv, Validation, CSV_HEADER};
pub use fetch::{fetch_history, FetchClient};
pub use stats::{align, asset_stats, daily_returns, AlignedCloseMatrix, AssetStats, ReturnSeries};
pub use universe::{SectorMember, SectorUniverse};

pub(crate) use stats::simple_returns as stats_returns;

/// Trading days per calendar year used for annualization.
pub const TRADING_DAYS: f64 = 250.0;

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: invalid bar: {reason}")]
    InvalidBar { line: usize, reason: String },
    #[error("duplicate date {date} in series {symbol}")]
    DuplicateDate { symbol: String, date: NaiveDate },
    #[error("series {symbol} is empty")]
    Empty { symbol: String },
    #[error("series {symbol} has {len} observations, need at least {need}")]
    TooShort { symbol: String, len: usize, need: usize },
    #[error("no common dates across {0:?}")]
    EmptyIntersection(Vec<String>),
    #[error("no series to align")]
    NoSeries,
    #[error("invalid date range: start {start} is not before end {end}")]
    InvalidRange { start: NaiveDate, end: NaiveDate },
    #[error("request for {symbol} failed after {attempts} attempts: {reason}")]
    Network { symbol: String, attempts: u32, reason: String },
    #[error("endpoint returned HTTP {status} for {symbol}")]
    HttpStatus { symbol: String, status: u16 },
    #[error("endpoint returned an empty body for {symbol}")]
    EmptyBody { symbol: String },
}

pub type Result<T> = std::result::Result<T, MarketDataError>;

/// One daily OHLCV bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
    pub adj_close: f64,
}

impl PriceBar {
    /// Checks the bar invariants, returning the first violation.
    pub fn check(&self) -> std::result::Result<(), String> {
        let fields = [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
            ("volume", self.volume),
            ("adj_close", self.adj_close),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(format!("{name} is not finite"));
        }
        if self.low > self.high {
            return Err(format!("low {} > high {}", self.low, self.high));
        }
        if self.close <= 0.0 {
            return Err(format!("close {} is not positive", self.close));
        }
        if self.volume < 0.0 {
            return Err(format!("volume {} is negative", self.volume));
        }
        Ok(())
    }
}

/// Dated bars for one symbol, strictly increasing in date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    symbol: String,
    bars: Vec<PriceBar>,
}

impl PriceSeries {
    /// Sorts the bars by date and rejects duplicates and empty input.
    pub fn new(symbol: impl Into<String>, mut bars: Vec<PriceBar>) -> Result<Self> {
        let symbol = symbol.into();
        if bars.is_empty() {
            return Err(MarketDataError::Empty { symbol });
        }
        bars.sort_by_key(|b| b.date);
        if let Some(w) = bars.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(MarketDataError::DuplicateDate { symbol, date: w[0].date });
        }
        Ok(Self { symbol, bars })
    }

    /// Builds a series from (date, close) pairs with the other fields set to
    /// the close and zero volume.
    pub fn from_closes(
        symbol: impl Into<String>,
        points: impl IntoIterator<Item = (NaiveDate, f64)>,
    ) -> Result<Self> {
        let bars = points
            .into_iter()
            .map(|(date, close)| PriceBar {
                date,
                open: close,
                high: close,
                low: close,
                close,
                volume: 0.0,
                adj_close: close,
            })
            .collect();
        Self::new(symbol, bars)
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn bars(&self) -> &[PriceBar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.bars.iter().map(|b| b.date).collect()
    }

    /// Bars with `start <= date <= end`.
    pub fn between(&self, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        let bars: Vec<PriceBar> = self
            .bars
            .iter()
            .filter(|b| b.date >= start && b.date <= end)
            .copied()
            .collect();
        Self::new(self.symbol.clone(), bars)
    }

    /// Index of the first bar dated on or after `date`.
    pub fn index_on_or_after(&self, date: NaiveDate) -> Option<usize> {
        let idx = self.bars.partition_point(|b| b.date < date);
        (idx < self.bars.len()).then_some(idx)
    }
}
