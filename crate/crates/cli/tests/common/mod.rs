#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{Datelike, NaiveDate, Weekday};
use sectorfolio::market_data::{serialize_csv, PriceSeries};
use tempfile::TempDir;

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// Weekdays in `[start, end]`.
pub fn weekdays(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    start
        .iter_days()
        .take_while(|d| *d <= end)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect()
}

/// Smooth, strictly positive, symbol-dependent close path.
pub fn synthetic_closes(k: usize, n: usize) -> Vec<f64> {
    let base = 100.0 * (1.0 + 0.3 * k as f64);
    let freq = 0.07 * (k as f64 + 1.0);
    let drift = 0.0004 * ((k % 3) as f64 + 1.0);
    (0..n)
        .map(|i| {
            let i = i as f64;
            base * (1.0 + 0.05 * (freq * i + k as f64).sin() + 0.02 * (0.31 * i * (k as f64 + 0.5)).cos() + drift * i)
        })
        .collect()
}

pub struct Fixture {
    pub dir: TempDir,
    pub config: PathBuf,
    pub out: PathBuf,
}

pub const DEFAULT_HEADER: &str = r#"
data_dir = "data"
seed = 11
train_start = "2020-07-01"
train_end = "2020-12-31"
invest_date = "2021-01-01"
eval_date = "2021-06-01"
capital = 100000.0
n_draws = 100

[lstm]
window = 5
lstm_layers = [4]
dense_width = 4
batch_size = 16
epochs = 2
"#;

impl Fixture {
    /// Writes `data/<SYM>.csv` for every symbol and a config with the given
    /// sectors (member weights are equal).
    pub fn new(sectors: &[(&str, &[&str])]) -> Self {
        Self::with_header(DEFAULT_HEADER, sectors)
    }

    pub fn with_header(header: &str, sectors: &[(&str, &[&str])]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        std::fs::create_dir_all(&data).unwrap();
        let dates = weekdays(date(2020, 7, 1), date(2021, 6, 30));
        let mut k = 0;
        let mut text = header.to_string();
        for (name, members) in sectors {
            text.push_str(&format!("\n[[sectors]]\nname = \"{name}\"\nmembers = ["));
            for (j, sym) in members.iter().enumerate() {
                if j > 0 {
                    text.push_str(", ");
                }
                text.push_str(&format!("{{ symbol = \"{sym}\", index_weight = 1.0 }}"));
                let path = data.join(format!("{sym}.csv"));
                if !path.exists() {
                    write_series(&path, sym, &dates, &synthetic_closes(k, dates.len()));
                    k += 1;
                }
            }
            text.push_str("]\n");
        }
        let config = dir.path().join("run.toml");
        std::fs::write(&config, text).unwrap();
        let out = dir.path().join("out");
        Fixture { dir, config, out }
    }

    pub fn data(&self, symbol: &str) -> PathBuf {
        self.dir.path().join("data").join(format!("{symbol}.csv"))
    }

    pub fn run(&self, args: &[&str]) -> Output {
        self.run_in(&self.out, args)
    }

    pub fn run_in(&self, out: &Path, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_sectorfolio"))
            .arg("--config")
            .arg(&self.config)
            .arg("--out")
            .arg(out)
            .args(args)
            .env("RUST_LOG", "warn")
            .output()
            .unwrap()
    }

    pub fn ok(&self, args: &[&str]) -> Output {
        let o = self.run(args);
        assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
        o
    }

    pub fn read_out(&self, name: &str) -> String {
        std::fs::read_to_string(self.out.join(name)).unwrap()
    }
}

pub fn write_series(path: &Path, symbol: &str, dates: &[NaiveDate], closes: &[f64]) {
    let series = PriceSeries::from_closes(symbol, dates.iter().copied().zip(closes.iter().copied())).unwrap();
    std::fs::write(path, serialize_csv(&series)).unwrap();
}
