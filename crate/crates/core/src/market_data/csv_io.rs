use chrono::NaiveDate;
use log::warn;

use super::{MarketDataError, PriceBar, PriceSeries, Result};

pub const CSV_HEADER: &str = "date,open,high,low,close,volume,adj_close";

/// How bars that violate the [`PriceBar`] invariants are treated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Validation {
    /// Reject the whole input.
    #[default]
    Strict,
    /// Drop the bar and log a warning.
    Lenient,
}

/// Parses the price CSV schema in strict mode.
pub fn parse_csv(raw: &[u8], symbol: &str) -> Result<PriceSeries> {
    parse_csv_with(raw, symbol, Validation::Strict)
}

pub fn parse_csv_with(raw: &[u8], symbol: &str, validation: Validation) -> Result<PriceSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(raw);

    let mut records = reader.records();
    match records.next() {
        None => return Err(MarketDataError::Empty { symbol: symbol.to_string() }),
        Some(Err(e)) => return Err(malformed(1, e.to_string())),
        Some(Ok(header)) => {
            let got: Vec<&str> = header.iter().map(str::trim).collect();
            if got.join(",") != CSV_HEADER {
                return Err(malformed(1, format!("expected header `{CSV_HEADER}`, got `{}`", got.join(","))));
            }
        }
    }

    let mut bars = Vec::new();
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != 7 {
            return Err(malformed(line, format!("expected 7 fields, found {}", record.len())));
        }
        let date = NaiveDate::parse_from_str(record[0].trim(), "%Y-%m-%d")
            .map_err(|e| malformed(line, format!("bad date `{}`: {e}", &record[0])))?;
        let mut nums = [0.0; 6];
        for (slot, (i, name)) in nums
            .iter_mut()
            .zip(["open", "high", "low", "close", "volume", "adj_close"].into_iter().enumerate())
        {
            let field = record[i + 1].trim();
            *slot = field
                .parse::<f64>()
                .map_err(|_| malformed(line, format!("bad {name} `{field}`")))?;
        }
        let bar = PriceBar {
            date,
            open: nums[0],
            high: nums[1],
            low: nums[2],
            close: nums[3],
            volume: nums[4],
            adj_close: nums[5],
        };
        if let Err(reason) = bar.check() {
            match validation {
                Validation::Strict => return Err(MarketDataError::InvalidBar { line, reason }),
                Validation::Lenient => {
                    warn!("{symbol}: dropping line {line}: {reason}");
                    continue;
                }
            }
        }
        bars.push(bar);
    }
    PriceSeries::new(symbol, bars)
}

/// Writes a series in the price CSV schema (LF line endings).
pub fn serialize_csv(series: &PriceSeries) -> String {
    let mut out = String::with_capacity(64 * (series.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for b in series.bars() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            b.date.format("%Y-%m-%d"),
            b.open,
            b.high,
            b.low,
            b.close,
            b.volume,
            b.adj_close
        ));
    }
    out
}

fn malformed(line: usize, reason: String) -> MarketDataError {
    MarketDataError::MalformedRow { line, reason }
}
