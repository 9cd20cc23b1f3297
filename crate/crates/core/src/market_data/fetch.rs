use std::thread;
use std::time::Duration;

use chrono::NaiveDate;
use log::{debug, warn};

use super::{parse_csv, MarketDataError, PriceSeries, Result};

/// HTTP client for a price endpoint serving the CSV schema.
///
/// Sends `GET <endpoint>?symbol=..&start=YYYY-MM-DD&end=YYYY-MM-DD`. Transport
/// failures and 5xx responses are retried; 4xx responses fail immediately.
#[derive(Debug, Clone)]
pub struct FetchClient {
    pub endpoint: String,
    /// Total number of requests made before giving up.
    pub max_attempts: u32,
    /// Sleep before retry `k` is `backoff * k`.
    pub backoff: Duration,
    pub timeout: Duration,
}

impl FetchClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            max_attempts: 3,
            backoff: Duration::from_millis(250),
            timeout: Duration::from_secs(30),
        }
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn fetch(&self, symbol: &str, start: NaiveDate, end: NaiveDate) -> Result<PriceSeries> {
        if start >= end {
            return Err(MarketDataError::InvalidRange { start, end });
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let start_s = start.format("%Y-%m-%d").to_string();
        let end_s = end.format("%Y-%m-%d").to_string();

        let mut last_failure = String::new();
        for attempt in 1..=self.max_attempts.max(1) {
            if attempt > 1 {
                thread::sleep(self.backoff * (attempt - 1));
            }
            debug!("GET {} symbol={symbol} attempt {attempt}", self.endpoint);
            let response = agent
                .get(&self.endpoint)
                .query("symbol", symbol)
                .query("start", &start_s)
                .query("end", &end_s)
                .call();
            let mut response = match response {
                Ok(r) => r,
                Err(e) => {
                    warn!("{symbol}: attempt {attempt} failed: {e}");
                    last_failure = e.to_string();
                    continue;
                }
            };
            let status = response.status().as_u16();
            if status >= 500 {
                warn!("{symbol}: attempt {attempt} got HTTP {status}");
                last_failure = format!("HTTP {status}");
                continue;
            }
            if !(200..300).contains(&status) {
                return Err(MarketDataError::HttpStatus { symbol: symbol.to_string(), status });
            }
            let body = match response.body_mut().read_to_vec() {
                Ok(b) => b,
                Err(e) => {
                    last_failure = e.to_string();
                    continue;
                }
            };
            if body.iter().all(u8::is_ascii_whitespace) {
                return Err(MarketDataError::EmptyBody { symbol: symbol.to_string() });
            }
            return parse_csv(&body, symbol);
        }
        Err(MarketDataError::Network {
            symbol: symbol.to_string(),
            attempts: self.max_attempts.max(1),
            reason: last_failure,
        })
    }
}

/// Fetches with the default client settings.
pub fn fetch_history(symbol: &str, start: NaiveDate, end: NaiveDate, endpoint: &str) -> Result<PriceSeries> {
    FetchClient::new(endpoint).fetch(symbol, start, end)
}
