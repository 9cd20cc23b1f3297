//! Pipeline subcommands. Each writes its artifacts under the output
//! directory and returns the paths it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use chrono::NaiveDate;
use log::info;
use sectorfolio::backtest::{run_backtest, summarize, upsert_summary, BacktestLedger, Prices};
use sectorfolio::forecaster::{load_checkpoint, train, write_checkpoint, LstmModel};
use sectorfolio::market_data::{align, asset_stats, daily_returns, parse_csv, serialize_csv, FetchClient, PriceSeries};
use sectorfolio::portfolio_opt::{build_frontier, frontier_csv, mean_and_covariance, PortfolioReport, PortfolioWeights};

use crate::config::RunConfig;
use crate::fsio::write_atomic;
use crate::seeds;

pub fn load_series(config: &RunConfig, symbol: &str) -> Result<PriceSeries> {
    let path = config.data_path(symbol);
    if !path.exists() {
        bail!("missing data file for {symbol}: expected {}", path.display());
    }
    let raw = fs::read(&path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_csv(&raw, symbol).with_context(|| format!("invalid data for {symbol} in {}", path.display()))
}

fn training_window(config: &RunConfig, series: &PriceSeries) -> Result<PriceSeries> {
    series
        .between(config.train_start, config.train_end)
        .with_context(|| format!("{} has no bars between {} and {}", series.symbol(), config.train_start, config.train_end))
}

/// Per-symbol mean daily return and daily/annual volatility over the
/// training period.
pub fn cmd_stats(config: &RunConfig, out: &Path) -> Result<PathBuf> {
    let mut csv = String::from("symbol,mean_daily_return,daily_volatility,annual_volatility\n");
    for symbol in config.all_symbols() {
        let series = training_window(config, &load_series(config, &symbol)?)?;
        let stats = daily_returns(&series)
            .and_then(|r| asset_stats(&r))
            .with_context(|| format!("cannot compute statistics for {symbol}"))?;
        csv.push_str(&format!(
            "{symbol},{},{},{}\n",
            stats.mean_daily_return, stats.daily_volatility, stats.annual_volatility
        ));
    }
    let path = out.join("stats.csv");
    write_atomic(&path, csv)?;
    Ok(path)
}

/// Builds the sector's frontier cloud from training-period closes.
pub fn sector_frontier(config: &RunConfig, sector: &str) -> Result<PortfolioReport> {
    let (report, _) = frontier_with_cloud(config, sector)?;
    Ok(report)
}

fn frontier_with_cloud(config: &RunConfig, sector: &str) -> Result<(PortfolioReport, String)> {
    let universe = config.sector(sector)?;
    let series = universe
        .members
        .iter()
        .map(|m| training_window(config, &load_series(config, &m.symbol)?))
        .collect::<Result<Vec<_>>>()?;
    let aligned = align(&series).with_context(|| format!("cannot align sector {sector}"))?;
    let (mean, cov) = mean_and_covariance(&aligned).with_context(|| format!("sector {sector}"))?;
    let seed = seeds::derive(config.seed, seeds::FRONTIER, sector);
    let cloud = build_frontier(&mean, &cov, config.n_draws, config.risk_free, seed)
        .with_context(|| format!("frontier for sector {sector}"))?;
    let report = PortfolioReport::from_cloud(sector, &cloud).with_context(|| format!("sector {sector}"))?;
    Ok((report, frontier_csv(&cloud)))
}

#[derive(Debug)]
pub struct FrontierOutputs {
    pub frontier_csv: PathBuf,
    pub report_json: PathBuf,
    pub report: PortfolioReport,
}

pub fn cmd_frontier(config: &RunConfig, sector: &str, out: &Path) -> Result<FrontierOutputs> {
    let (report, csv) = frontier_with_cloud(config, sector)?;
    let frontier_path = out.join(format!("{sector}_frontier.csv"));
    let report_path = out.join(format!("{sector}_portfolios.json"));
    write_atomic(&frontier_path, csv)?;
    write_atomic(&report_path, report.to_json())?;
    info!(
        "{sector}: min risk {:.4} (return {:.4}), opt risk {:.4} (return {:.4}, sharpe {:.4})",
        report.min_risk.annual_risk,
        report.min_risk.annual_return,
        report.opt_risk.annual_risk,
        report.opt_risk.annual_return,
        report.opt_risk.sharpe
    );
    Ok(FrontierOutputs { frontier_csv: frontier_path, report_json: report_path, report })
}

pub fn checkpoint_path(out: &Path, symbol: &str) -> PathBuf {
    out.join(format!("{symbol}.ckpt"))
}

#[derive(Debug)]
pub struct TrainOutputs {
    pub checkpoint: PathBuf,
    pub trace_csv: PathBuf,
}

/// Trains the forecaster on the symbol's training-period closes.
pub fn cmd_train(config: &RunConfig, symbol: &str, out: &Path) -> Result<TrainOutputs> {
    let series = training_window(config, &load_series(config, symbol)?)?;
    let mut lstm = config.lstm.clone();
    lstm.seed = seeds::derive(config.seed, seeds::TRAIN, symbol);
    let (model, trace) = train(&lstm, &series.closes()).with_context(|| format!("training {symbol}"))?;
    let checkpoint = checkpoint_path(out, symbol);
    let trace_csv = out.join(format!("{symbol}_trace.csv"));
    write_atomic(&checkpoint, write_checkpoint(&model))?;
    write_atomic(&trace_csv, trace.to_csv())?;
    if let Some(last) = trace.epochs.last() {
        info!("{symbol}: epoch {} loss {:.6} mae {:.6}", last.epoch, last.train_loss, last.train_mae);
    }
    Ok(TrainOutputs { checkpoint, trace_csv })
}

pub fn load_model(out: &Path, symbol: &str) -> Result<LstmModel> {
    let path = checkpoint_path(out, symbol);
    if !path.exists() {
        bail!("no checkpoint for {symbol}: expected {}", path.display());
    }
    load_checkpoint(&path).with_context(|| format!("cannot load checkpoint {}", path.display()))
}

fn bar_on_or_after(series: &PriceSeries, date: NaiveDate) -> Result<usize> {
    series
        .index_on_or_after(date)
        .with_context(|| format!("no {} price on or after {date}", series.symbol()))
}

/// Parses a two-column `symbol,<value>` CSV with the given header.
pub fn read_symbol_values(path: &Path, value_column: &str) -> Result<Prices> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let expected = format!("symbol,{value_column}");
    match lines.next() {
        Some((_, h)) if h.trim() == expected => {}
        _ => bail!("{}: expected header `{expected}`", path.display()),
    }
    let mut out = Prices::new();
    for (i, line) in lines {
        let (sym, val) = line
            .split_once(',')
            .with_context(|| format!("{}:{}: expected two fields", path.display(), i + 1))?;
        let val: f64 = val
            .trim()
            .parse()
            .with_context(|| format!("{}:{}: bad {value_column} `{}`", path.display(), i + 1, val.trim()))?;
        if out.insert(sym.trim().to_string(), val).is_some() {
            bail!("{}:{}: duplicate symbol {}", path.display(), i + 1, sym.trim());
        }
    }
    Ok(out)
}

#[derive(Debug, Default, Clone)]
pub struct BacktestOptions {
    /// `symbol,price` file replacing model predictions.
    pub predicted_prices: Option<PathBuf>,
    /// `symbol,weight` file replacing the max-Sharpe weights.
    pub weights: Option<PathBuf>,
}

#[derive(Debug)]
pub struct BacktestOutputs {
    pub ledger_json: PathBuf,
    pub ledger_csv: PathBuf,
    pub summary_csv: PathBuf,
    pub ledger: BacktestLedger,
}

/// Invests in the sector's max-Sharpe portfolio at `invest_date` and values
/// it at `eval_date` under actual and predicted closes.
pub fn cmd_backtest(config: &RunConfig, sector: &str, out: &Path, options: &BacktestOptions) -> Result<BacktestOutputs> {
    let universe = config.sector(sector)?;
    let symbols = universe.symbols();
    let weights = match &options.weights {
        Some(path) => {
            let w = read_symbol_values(path, "weight")?;
            let values = symbols
                .iter()
                .map(|s| w.get(s).copied().with_context(|| format!("{} has no weight for {s}", path.display())))
                .collect::<Result<Vec<_>>>()?;
            PortfolioWeights::new(symbols.clone(), values).with_context(|| format!("weights in {}", path.display()))?
        }
        None => {
            let report = sector_frontier(config, sector)?;
            let values = symbols.iter().map(|s| report.opt_risk.weights[s]).collect();
            PortfolioWeights::new(symbols.clone(), values)?
        }
    };
    let overrides = options.predicted_prices.as_deref().map(|p| read_symbol_values(p, "price")).transpose()?;

    let mut start = Prices::new();
    let mut actual = Prices::new();
    let mut predicted = Prices::new();
    for symbol in &symbols {
        let series = load_series(config, symbol)?;
        let closes = series.closes();
        let buy = bar_on_or_after(&series, config.invest_date)?;
        let eval = bar_on_or_after(&series, config.eval_date)?;
        start.insert(symbol.clone(), closes[buy]);
        actual.insert(symbol.clone(), closes[eval]);
        let price = match &overrides {
            Some(map) => *map
                .get(symbol)
                .with_context(|| format!("predicted-prices file has no price for {symbol}"))?,
            None => {
                let model = load_model(out, symbol)
                    .with_context(|| format!("{symbol} needs a checkpoint or a --predicted-prices entry"))?;
                let window = model.config.window;
                ensure!(eval >= window, "{symbol}: need {window} closes before {}", series.bars()[eval].date);
                model.predict_next(&closes[eval - window..eval]).with_context(|| format!("predicting {symbol}"))?
            }
        };
        predicted.insert(symbol.clone(), price);
    }

    let ledger = run_backtest(config.capital, &weights, &start, &actual, &predicted)
        .with_context(|| format!("backtest for sector {sector}"))?;
    let ledger_json = out.join(format!("{sector}_ledger.json"));
    let ledger_csv = out.join(format!("{sector}_ledger.csv"));
    let summary_csv = out.join("summary.csv");
    write_atomic(&ledger_json, ledger.to_json())?;
    write_atomic(&ledger_csv, ledger.to_csv())?;
    let row = summarize(&[(sector, ledger.clone())]).remove(0);
    let existing = if summary_csv.exists() { fs::read_to_string(&summary_csv)? } else { String::new() };
    write_atomic(&summary_csv, upsert_summary(&existing, &row))?;
    info!("{sector}: ROI actual {:.2}% predicted {:.2}%", ledger.roi_actual, ledger.roi_predicted);
    Ok(BacktestOutputs { ledger_json, ledger_csv, summary_csv, ledger })
}

/// One-day-ahead predictions for each bar in `[from, to]`, each from the
/// trailing window of actual closes.
pub fn cmd_plotdata(config: &RunConfig, symbol: &str, from: NaiveDate, to: NaiveDate, out: &Path) -> Result<PathBuf> {
    ensure!(from <= to, "plot range start {from} is after end {to}");
    let model = load_model(out, symbol)?;
    let series = load_series(config, symbol)?;
    let bars = series.bars();
    let (first, last) = (bars[0].date, bars[bars.len() - 1].date);
    if from < first || to > last {
        bail!("range {from}..{to} is outside the data for {symbol} ({first}..{last})");
    }
    let closes = series.closes();
    let window = model.config.window;
    let mut csv = String::from("date,actual_close,predicted_close\n");
    let mut rows = 0;
    for (i, bar) in bars.iter().enumerate().filter(|(_, b)| b.date >= from && b.date <= to) {
        ensure!(i >= window, "{symbol}: {} has fewer than {window} prior closes", bar.date);
        let pred = model.predict_next(&closes[i - window..i])?;
        csv.push_str(&format!("{},{},{}\n", bar.date.format("%Y-%m-%d"), bar.close, pred));
        rows += 1;
    }
    ensure!(rows > 0, "no {symbol} bars between {from} and {to}");
    let path = out.join(format!("{symbol}_plotdata.csv"));
    write_atomic(&path, csv)?;
    Ok(path)
}

/// Downloads each symbol's history into `dir/<SYMBOL>.csv`, one thread per
/// symbol.
pub fn cmd_fetch(
    client: &FetchClient,
    symbols: &[String],
    start: NaiveDate,
    end: NaiveDate,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    ensure!(!symbols.is_empty(), "no symbols to fetch");
    let results: Vec<Result<PathBuf>> = std::thread::scope(|scope| {
        let handles: Vec<_> = symbols
            .iter()
            .map(|symbol| {
                scope.spawn(move || -> Result<PathBuf> {
                    let series =
                        client.fetch(symbol, start, end).with_context(|| format!("fetching {symbol}"))?;
                    let path = dir.join(format!("{symbol}.csv"));
                    write_atomic(&path, serialize_csv(&series))?;
                    Ok(path)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("fetch thread panicked")).collect()
    });
    results.into_iter().collect()
}
