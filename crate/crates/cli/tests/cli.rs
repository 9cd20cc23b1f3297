mod common;

use std::fs;

use common::{date, weekdays, write_series, Fixture};
use sectorfolio::market_data::parse_csv;
use sectorfolio_cli::commands::{self, BacktestOptions};
use sectorfolio_cli::config::RunConfig;

const FIVE: &[&str] = &["AAA", "BBB", "CCC", "DDD", "EEE"];

fn stderr(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn stats_rows_follow_input_order() {
    let fx = Fixture::new(&[("tech", FIVE)]);
    fx.ok(&["stats"]);
    let csv = fx.read_out("stats.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "symbol,mean_daily_return,daily_volatility,annual_volatility");
    assert_eq!(lines.len(), 6);
    for (line, sym) in lines[1..].iter().zip(FIVE) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], *sym);
        let daily: f64 = fields[2].parse().unwrap();
        let annual: f64 = fields[3].parse().unwrap();
        assert!((annual / daily - 250f64.sqrt()).abs() < 1e-9);
    }
}

#[test]
fn stats_constant_series_has_zero_volatility() {
    let fx = Fixture::new(&[("flat", &["FLT"])]);
    let dates = weekdays(date(2020, 7, 1), date(2021, 6, 30));
    write_series(&fx.data("FLT"), "FLT", &dates, &vec![42.0; dates.len()]);
    fx.ok(&["stats"]);
    assert_eq!(fx.read_out("stats.csv").lines().nth(1).unwrap(), "FLT,0,0,0");
}

#[test]
fn missing_csv_names_symbol_and_path() {
    let fx = Fixture::new(&[("tech", FIVE)]);
    fs::remove_file(fx.data("CCC")).unwrap();
    let o = fx.run(&["stats"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("CCC"), "{err}");
    assert!(err.contains(&fx.data("CCC").display().to_string()), "{err}");
}

#[test]
fn frontier_is_byte_identical_across_runs() {
    let fx = Fixture::new(&[("tech", FIVE)]);
    let second = fx.dir.path().join("out2");
    fx.ok(&["frontier", "tech"]);
    assert!(fx.run_in(&second, &["frontier", "tech"]).status.success());
    for name in ["tech_frontier.csv", "tech_portfolios.json"] {
        assert_eq!(fs::read(fx.out.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
    assert_eq!(fx.read_out("tech_frontier.csv").lines().count(), 101);

    // a different seed moves the cloud
    let third = fx.dir.path().join("out3");
    assert!(fx.run_in(&third, &["--seed", "12", "frontier", "tech"]).status.success());
    assert_ne!(fs::read(fx.out.join("tech_frontier.csv")).unwrap(), fs::read(third.join("tech_frontier.csv")).unwrap());
}

#[test]
fn frontier_report_has_five_normalised_weights() {
    let fx = Fixture::new(&[("tech", FIVE)]);
    fx.ok(&["frontier"]);
    let report: serde_json::Value = serde_json::from_str(&fx.read_out("tech_portfolios.json")).unwrap();
    for key in ["min_risk", "opt_risk"] {
        let weights = report[key]["weights"].as_object().unwrap();
        assert_eq!(weights.keys().cloned().collect::<Vec<_>>(), FIVE);
        let sum: f64 = weights.values().map(|w| w.as_f64().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-9, "{key}: {sum}");
    }
    assert!(report["opt_risk"]["sharpe"].as_f64().unwrap() >= report["min_risk"]["sharpe"].as_f64().unwrap());
}

#[test]
fn identical_assets_give_coincident_portfolios() {
    let fx = Fixture::new(&[("twins", &["TW1", "TW2", "TW3"])]);
    let closes = fs::read_to_string(fx.data("TW1")).unwrap();
    fs::write(fx.data("TW2"), &closes).unwrap();
    fs::write(fx.data("TW3"), &closes).unwrap();
    fx.ok(&["frontier", "twins"]);
    let report: serde_json::Value = serde_json::from_str(&fx.read_out("twins_portfolios.json")).unwrap();
    for field in ["annual_risk", "annual_return"] {
        let a = report["min_risk"][field].as_f64().unwrap();
        let b = report["opt_risk"][field].as_f64().unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{field}: {a} vs {b}");
    }
}

#[test]
fn unknown_sector_fails() {
    let fx = Fixture::new(&[("tech", FIVE)]);
    let o = fx.run(&["frontier", "energy"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("energy"));
}

#[test]
fn train_writes_trace_and_reproducible_checkpoint() {
    let header = common::DEFAULT_HEADER.replace("epochs = 2", "epochs = 1");
    let fx = Fixture::with_header(&header, &[("tech", &["AAA"])]);
    let second = fx.dir.path().join("out2");
    fx.ok(&["train", "AAA"]);
    assert!(fx.run_in(&second, &["train", "AAA"]).status.success());
    let trace = fx.read_out("AAA_trace.csv");
    assert_eq!(trace.lines().count(), 2, "{trace}");
    assert!(trace.starts_with("epoch,train_loss,train_mae,val_loss,val_mae\n1,"));
    for name in ["AAA.ckpt", "AAA_trace.csv"] {
        assert_eq!(fs::read(fx.out.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn corrupt_checkpoint_is_rejected_on_reload() {
    let fx = Fixture::new(&[("tech", &["AAA"])]);
    fx.ok(&["train"]);
    let path = fx.out.join("AAA.ckpt");
    let good = fs::read(&path).unwrap();

    let mut bad_version = good.clone();
    bad_version[8] = 99;
    fs::write(&path, &bad_version).unwrap();
    let o = fx.run(&["plotdata", "AAA"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("version"), "{}", stderr(&o));

    let truncated = &good[..good.len() - 8];
    fs::write(&path, truncated).unwrap();
    let o = fx.run(&["plotdata", "AAA"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("AAA.ckpt"), "{}", stderr(&o));
}

#[test]
fn train_rejects_insufficient_history() {
    let fx = Fixture::new(&[("tech", &["AAA"])]);
    let dates = weekdays(date(2020, 12, 28), date(2021, 6, 30));
    let closes: Vec<f64> = (0..dates.len()).map(|i| 50.0 + i as f64).collect();
    write_series(&fx.data("AAA"), "AAA", &dates, &closes);
    let o = fx.run(&["train", "AAA"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("AAA") && err.contains("need at least 6"), "{err}");
}

fn actual_prices_file(fx: &Fixture, symbols: &[&str]) -> std::path::PathBuf {
    let mut text = String::from("symbol,price\n");
    for sym in symbols {
        let series = parse_csv(&fs::read(fx.data(sym)).unwrap(), sym).unwrap();
        let i = series.index_on_or_after(date(2021, 6, 1)).unwrap();
        text.push_str(&format!("{sym},{}\n", series.closes()[i]));
    }
    let path = fx.dir.path().join("actual.csv");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn backtest_with_actual_predictions_gives_equal_roi() {
    let fx = Fixture::new(&[("tech", FIVE)]);
    let prices = actual_prices_file(&fx, FIVE);
    fx.ok(&["backtest", "tech", "--predicted-prices", prices.to_str().unwrap()]);
    let ledger: serde_json::Value = serde_json::from_str(&fx.read_out("tech_ledger.json")).unwrap();
    assert_eq!(ledger["roi_actual"], ledger["roi_predicted"]);
    assert_eq!(ledger["rows"].as_array().unwrap().len(), 5);
    let summary = fx.read_out("summary.csv");
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "tech");
    assert_eq!(row[1], row[2]);
}

#[test]
fn backtest_without_checkpoints_or_override_fails() {
    let fx = Fixture::new(&[("tech", FIVE)]);
    let o = fx.run(&["backtest", "tech"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("checkpoint"), "{}", stderr(&o));
}

#[test]
fn backtest_uses_checkpoints() {
    let fx = Fixture::new(&[("pair", &["AAA", "BBB"])]);
    fx.ok(&["train"]);
    fx.ok(&["backtest"]);
    let ledger: serde_json::Value = serde_json::from_str(&fx.read_out("pair_ledger.json")).unwrap();
    for row in ledger["rows"].as_array().unwrap() {
        let p = row["predicted_price"].as_f64().unwrap();
        assert!(p.is_finite() && p > 0.0);
    }
}

#[test]
fn it_sector_ledger_via_override_files() {
    let it = ["IFY", "TCS", "WIP", "TEM", "HCL"];
    let fx = Fixture::new(&[("it", &it)]);
    // amount, buy price, actual end price, predicted end price
    let rows = [
        (27192.0, 1260.0, 1387.0, 1413.0),
        (27052.0, 2928.0, 3153.0, 3151.0),
        (26930.0, 388.0, 543.0, 549.0),
        (214.0, 978.0, 1031.0, 1029.0),
        (18612.0, 951.0, 951.0, 962.0),
    ];
    let dates = weekdays(date(2020, 7, 1), date(2021, 6, 30));
    let mut weights = String::from("symbol,weight\n");
    let mut predicted = String::from("symbol,price\n");
    for (sym, (amount, buy, end, pred)) in it.iter().zip(rows) {
        let closes: Vec<f64> = dates
            .iter()
            .enumerate()
            .map(|(i, d)| {
                if *d < date(2021, 1, 1) {
                    buy * (0.9 + 0.1 * (i as f64 * 0.2).sin().abs())
                } else if *d < date(2021, 6, 1) {
                    buy
                } else {
                    end
                }
            })
            .collect();
        write_series(&fx.data(sym), sym, &dates, &closes);
        weights.push_str(&format!("{sym},{}\n", amount / 100_000.0));
        predicted.push_str(&format!("{sym},{pred}\n"));
    }
    let wpath = fx.dir.path().join("weights.csv");
    let ppath = fx.dir.path().join("predicted.csv");
    fs::write(&wpath, weights).unwrap();
    fs::write(&ppath, predicted).unwrap();
    fx.ok(&["backtest", "it", "--weights", wpath.to_str().unwrap(), "--predicted-prices", ppath.to_str().unwrap()]);

    let ledger: serde_json::Value = serde_json::from_str(&fx.read_out("it_ledger.json")).unwrap();
    let total = ledger["total_actual"].as_f64().unwrap();
    assert!((total - 115_593.0).abs() <= 10.0, "{total}");
    assert!((ledger["roi_actual"].as_f64().unwrap() - 15.59).abs() <= 0.05);
    let shares: Vec<f64> = ledger["rows"].as_array().unwrap().iter().map(|r| r["shares"].as_f64().unwrap()).collect();
    for (s, expect) in shares.iter().zip([21.58, 9.24, 69.41, 0.22, 19.57]) {
        assert!((s - expect).abs() <= 0.01, "{s} vs {expect}");
    }
    assert!(fx.read_out("it_ledger.csv").lines().last().unwrap().starts_with("Total,100000,"));
}

#[test]
fn seven_sector_runs_fill_summary() {
    let names = ["auto", "bank", "fmcg", "it", "metal", "pharma", "realty"];
    let syms: Vec<[String; 2]> = names.iter().map(|n| [format!("{n}1").to_uppercase(), format!("{n}2").to_uppercase()]).collect();
    let sym_refs: Vec<Vec<&str>> = syms.iter().map(|p| p.iter().map(String::as_str).collect()).collect();
    let sectors: Vec<(&str, &[&str])> = names.iter().zip(&sym_refs).map(|(n, s)| (*n, s.as_slice())).collect();
    let fx = Fixture::new(&sectors);
    let all: Vec<&str> = sym_refs.iter().flatten().copied().collect();
    let prices = actual_prices_file(&fx, &all);
    for n in names {
        fx.ok(&["backtest", n, "--predicted-prices", prices.to_str().unwrap()]);
    }
    let summary = fx.read_out("summary.csv");
    assert_eq!(summary.lines().count(), 8);
    assert_eq!(summary.lines().next().unwrap(), "sector,predicted_return_pct,actual_return_pct");
    // re-running a sector replaces its row
    fx.ok(&["backtest", "bank", "--predicted-prices", prices.to_str().unwrap()]);
    assert_eq!(fx.read_out("summary.csv"), summary);
}

#[test]
fn plotdata_single_day_and_passthrough() {
    let fx = Fixture::new(&[("tech", &["AAA"])]);
    fx.ok(&["train"]);
    fx.ok(&["plotdata", "AAA", "--from", "2021-03-01", "--to", "2021-03-01"]);
    let csv = fx.read_out("AAA_plotdata.csv");
    assert_eq!(csv.lines().count(), 2);

    fx.ok(&["plotdata", "AAA"]);
    let series = parse_csv(&fs::read(fx.data("AAA")).unwrap(), "AAA").unwrap();
    let csv = fx.read_out("AAA_plotdata.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "date,actual_close,predicted_close");
    let mut n = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let d: chrono::NaiveDate = f[0].parse().unwrap();
        let i = series.index_on_or_after(d).unwrap();
        assert_eq!(series.bars()[i].date, d);
        assert_eq!(f[1].parse::<f64>().unwrap(), series.closes()[i]);
        let p: f64 = f[2].parse().unwrap();
        assert!(p.is_finite() && p > 0.0);
        n += 1;
    }
    assert_eq!(n, weekdays(date(2021, 1, 1), date(2021, 6, 1)).len());
}

#[test]
fn plotdata_range_outside_data_fails() {
    let fx = Fixture::new(&[("tech", &["AAA"])]);
    fx.ok(&["train"]);
    let o = fx.run(&["plotdata", "AAA", "--from", "2021-06-01", "--to", "2022-01-01"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("outside"), "{}", stderr(&o));
}

#[test]
fn library_entry_points_share_config() {
    let fx = Fixture::new(&[("tech", &["AAA", "BBB"])]);
    let config = RunConfig::load(&fx.config).unwrap();
    let report = commands::sector_frontier(&config, "tech").unwrap();
    assert_eq!(report.n_draws, 100);
    let err = commands::cmd_backtest(&config, "tech", &fx.out, &BacktestOptions::default()).unwrap_err();
    assert!(format!("{err:#}").contains("AAA"));
}
