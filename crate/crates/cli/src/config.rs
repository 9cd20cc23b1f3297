//! Run configuration file (TOML).
//!
//! ```toml
//! data_dir = "data"            # <SYMBOL>.csv files, relative to this file
//! seed = 7
//! train_start = "2016-01-01"
//! train_end = "2020-12-31"
//! invest_date = "2021-01-01"
//! eval_date = "2021-06-01"
//! capital = 100000.0
//! n_draws = 10000
//! risk_free = 0.01
//!
//! [lstm]
//! window = 50
//!
//! [[sectors]]
//! name = "it"
//! members = [{ symbol = "IFY", index_weight = 25.10 }]
//! ```
//!
//! Unknown keys are rejected. The network seed is derived from the top-level
//! `seed`, so `lstm.seed` is not accepted.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use sectorfolio::forecaster::LstmConfig;
use sectorfolio::market_data::SectorUniverse;
use sectorfolio::portfolio_opt::{DEFAULT_DRAWS, DEFAULT_RISK_FREE};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    #[serde(default)]
    pub sectors: Vec<SectorUniverse>,
    #[serde(default = "defaults::train_start")]
    pub train_start: NaiveDate,
    #[serde(default = "defaults::train_end")]
    pub train_end: NaiveDate,
    #[serde(default = "defaults::invest_date")]
    pub invest_date: NaiveDate,
    #[serde(default = "defaults::eval_date")]
    pub eval_date: NaiveDate,
    #[serde(default = "defaults::capital")]
    pub capital: f64,
    #[serde(default = "defaults::n_draws")]
    pub n_draws: usize,
    #[serde(default = "defaults::risk_free")]
    pub risk_free: f64,
    #[serde(default)]
    pub lstm: LstmConfig,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
    }

    pub fn train_start() -> NaiveDate {
        date(2016, 1, 1)
    }
    pub fn train_end() -> NaiveDate {
        date(2020, 12, 31)
    }
    pub fn invest_date() -> NaiveDate {
        date(2021, 1, 1)
    }
    pub fn eval_date() -> NaiveDate {
        date(2021, 6, 1)
    }
    pub fn capital() -> f64 {
        100_000.0
    }
    pub fn n_draws() -> usize {
        DEFAULT_DRAWS
    }
    pub fn risk_free() -> f64 {
        DEFAULT_RISK_FREE
    }
}

impl RunConfig {
    /// Parses and validates; a relative `data_dir` is resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: toml::Table = toml::from_str(text).context("config is not valid TOML")?;
        if raw.get("lstm").and_then(|v| v.as_table()).is_some_and(|t| t.contains_key("seed")) {
            bail!("`lstm.seed` is not allowed; set the top-level `seed`");
        }
        let mut config: RunConfig = toml::from_str(text).context("invalid config")?;
        if config.data_dir.is_relative() {
            config.data_dir = base.join(&config.data_dir);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base).with_context(|| format!("in config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_start < self.train_end && self.train_end <= self.invest_date && self.invest_date < self.eval_date) {
            bail!(
                "dates must satisfy train_start < train_end <= invest_date < eval_date, got {} / {} / {} / {}",
                self.train_start,
                self.train_end,
                self.invest_date,
                self.eval_date
            );
        }
        if !(self.capital > 0.0) {
            bail!("capital must be positive, got {}", self.capital);
        }
        if self.n_draws == 0 {
            bail!("n_draws must be at least 1");
        }
        if !self.risk_free.is_finite() {
            bail!("risk_free must be finite");
        }
        self.lstm.validate()?;
        for (i, s) in self.sectors.iter().enumerate() {
            s.validate().map_err(anyhow::Error::msg)?;
            if self.sectors[..i].iter().any(|o| o.name == s.name) {
                bail!("sector {} defined twice", s.name);
            }
        }
        Ok(())
    }

    pub fn sector(&self, name: &str) -> Result<&SectorUniverse> {
        self.sectors.iter().find(|s| s.name == name).with_context(|| {
            let known: Vec<&str> = self.sectors.iter().map(|s| s.name.as_str()).collect();
            format!("unknown sector `{name}` (configured: {known:?})")
        })
    }

    /// Every configured symbol once, in order of first appearance.
    pub fn all_symbols(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.sectors {
            for m in &s.members {
                if !out.contains(&m.symbol) {
                    out.push(m.symbol.clone());
                }
            }
        }
        out
    }

    pub fn data_path(&self, symbol: &str) -> PathBuf {
        self.data_dir.join(format!("{symbol}.csv"))
    }
}
