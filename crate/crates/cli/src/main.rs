use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use sectorfolio::market_data::FetchClient;
use sectorfolio_cli::commands::{self, BacktestOptions};
use sectorfolio_cli::config::RunConfig;

#[derive(Parser)]
#[command(name = "sectorfolio", version, about = "Sector portfolio construction and LSTM price forecasting")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "sectorfolio.toml")]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the annual risk-free rate.
    #[arg(long, global = true)]
    risk_free: Option<f64>,
    /// Overrides the number of random portfolios.
    #[arg(long, global = true)]
    draws: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-symbol return and volatility over the training period.
    Stats,
    /// Random-portfolio frontier and min-risk / max-Sharpe report.
    Frontier {
        /// Sector name; all sectors when omitted.
        sector: Option<String>,
    },
    /// Train the forecaster and write a checkpoint and trace.
    Train {
        /// Symbol; every configured symbol when omitted.
        symbol: Option<String>,
    },
    /// Invest in the max-Sharpe portfolio and compare actual vs predicted value.
    Backtest {
        /// Sector name; all sectors when omitted.
        sector: Option<String>,
        /// `symbol,price` file used instead of checkpoints.
        #[arg(long)]
        predicted_prices: Option<PathBuf>,
        /// `symbol,weight` file used instead of the max-Sharpe weights.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// One-day-ahead actual vs predicted closes.
    Plotdata {
        /// Symbol; every configured symbol when omitted.
        symbol: Option<String>,
        /// First date (default: invest_date).
        #[arg(long)]
        from: Option<NaiveDate>,
        /// Last date (default: eval_date).
        #[arg(long)]
        to: Option<NaiveDate>,
    },
    /// Download price history over HTTP into the data directory.
    Fetch {
        /// Endpoint URL accepting `symbol`, `start`, `end` query parameters.
        #[arg(long)]
        endpoint: String,
        /// Symbols to fetch (default: every configured symbol).
        #[arg(long, value_delimiter = ',')]
        symbols: Vec<String>,
        /// Start date (default: train_start).
        #[arg(long)]
        start: Option<NaiveDate>,
        /// End date (default: day after eval_date).
        #[arg(long)]
        end: Option<NaiveDate>,
        /// Retry backoff in milliseconds.
        #[arg(long, default_value_t = 250)]
        backoff_ms: u64,
    },
}

fn or_all(one: Option<String>, all: Vec<String>) -> Vec<String> {
    match one {
        Some(x) => vec![x],
        None => all,
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(rf) = cli.risk_free {
        config.risk_free = rf;
    }
    if let Some(draws) = cli.draws {
        config.n_draws = draws;
    }
    config.validate().with_context(|| format!("invalid config {}", cli.config.display()))?;
    let out = cli.out.as_path();
    let sectors = || config.sectors.iter().map(|s| s.name.clone()).collect::<Vec<_>>();

    match cli.command {
        Command::Stats => {
            let path = commands::cmd_stats(&config, out)?;
            println!("{}", path.display());
        }
        Command::Frontier { sector } => {
            for name in or_all(sector, sectors()) {
                let o = commands::cmd_frontier(&config, &name, out)?;
                println!("{}\n{}", o.frontier_csv.display(), o.report_json.display());
            }
        }
        Command::Train { symbol } => {
            for sym in or_all(symbol, config.all_symbols()) {
                let o = commands::cmd_train(&config, &sym, out)?;
                println!("{}\n{}", o.checkpoint.display(), o.trace_csv.display());
            }
        }
        Command::Backtest { sector, predicted_prices, weights } => {
            let options = BacktestOptions { predicted_prices, weights };
            for name in or_all(sector, sectors()) {
                let o = commands::cmd_backtest(&config, &name, out, &options)?;
                println!("{}\n{}", o.ledger_json.display(), o.ledger_csv.display());
                println!(
                    "{name}: total actual {:.2} predicted {:.2} | ROI actual {:.2}% predicted {:.2}%",
                    o.ledger.total_actual, o.ledger.total_predicted, o.ledger.roi_actual, o.ledger.roi_predicted
                );
            }
        }
        Command::Plotdata { symbol, from, to } => {
            let from = from.unwrap_or(config.invest_date);
            let to = to.unwrap_or(config.eval_date);
            for sym in or_all(symbol, config.all_symbols()) {
                let path = commands::cmd_plotdata(&config, &sym, from, to, out)?;
                println!("{}", path.display());
            }
        }
        Command::Fetch { endpoint, symbols, start, end, backoff_ms } => {
            let symbols = if symbols.is_empty() { config.all_symbols() } else { symbols };
            if symbols.is_empty() {
                bail!("no symbols to fetch");
            }
            let start = start.unwrap_or(config.train_start);
            let end = end.unwrap_or_else(|| config.eval_date.succ_opt().expect("date in range"));
            let client = FetchClient::new(endpoint).with_backoff(Duration::from_millis(backoff_ms));
            for path in commands::cmd_fetch(&client, &symbols, start, end, &config.data_dir)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
