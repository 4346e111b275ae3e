mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use superhedge::cli::exit_code;
use superhedge::Error;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superhedge")).args(args).output().unwrap()
}

fn config(name: &str) -> String {
    common::configs_dir().join(name).to_str().unwrap().to_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr));
    })
}

fn write_variant(dir: &Path, base: &str, edit: impl FnOnce(&mut Value)) -> String {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(config(base)).unwrap()).unwrap();
    edit(&mut v);
    let path = dir.join(base);
    std::fs::write(&path, v.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn price_binomial_call() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["price", "--config", &config("binomial_call.json"), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert!((doc["price"].as_f64().unwrap() - 10.0).abs() < 1e-6);
    assert_eq!(doc["command"], "price");
    assert!(doc.get("timing_ms").is_none());
    assert!(dir.path().join("price.json").exists());
    let layers = std::fs::read_to_string(dir.path().join("layers.csv")).unwrap();
    assert!(layers.starts_with("t,node_id,"));
}

#[test]
fn zero_claim_prices_to_zero() {
    let doc = json(&run(&["price", "--config", &config("zero_claim.json")]));
    assert!(doc["price"].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn verbose_adds_timing() {
    let doc = json(&run(&["price", "--config", &config("binomial_call.json"), "--verbose", "--threads", "2"]));
    assert!(doc["timing_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn missing_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_variant(dir.path(), "binomial_call.json", |v| {
        v.as_object_mut().unwrap().remove("grid");
    });
    let out = run(&["price", "--config", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_variant(dir.path(), "binomial_call.json", |v| {
        v["colour"] = Value::from("blue");
    });
    assert_eq!(run(&["check", "--config", &path]).status.code(), Some(2));
}

#[test]
fn degenerate_radius_without_fallback_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_variant(dir.path(), "saip_boundary.json", |v| {
        v["fallback_radius"] = Value::Null;
    });
    assert_eq!(run(&["price", "--config", &path]).status.code(), Some(4));
}

#[test]
fn error_exit_codes() {
    assert_eq!(exit_code(&Error::NotHedgeable("x".into())), 3);
    assert_eq!(exit_code(&Error::Config("x".into())), 2);
    assert_eq!(exit_code(&Error::TooLarge("x".into())), 5);
}

#[test]
fn check_reports_saip() {
    let doc = json(&run(&["check", "--config", &config("binomial_call.json")]));
    assert_eq!(doc["arbitrage"]["times"][0]["saip"], true);
    let doc = json(&run(&["check", "--config", &config("saip_boundary.json")]));
    let t0 = &doc["arbitrage"]["times"][0];
    assert_eq!(t0["aip"], true);
    assert_eq!(t0["saip"], false);
    let doc = json(&run(&["check", "--config", &config("fixed_cost_call.json")]));
    assert!(doc["arbitrage"]["times"][0]["horizon_saip"].is_boolean());
}

#[test]
fn hedge_reports_shortfall() {
    let doc = json(&run(&["hedge", "--config", &config("binomial_call.json"), "--cash", "10"]));
    assert!(doc["worst_shortfall"].as_f64().unwrap().abs() < 1e-9);

    let dir = tempfile::tempdir().unwrap();
    let out = run(&["hedge", "--config", &config("binomial_call.json"), "--cash", "9", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["worst_shortfall"].as_f64().unwrap() < 0.0);
    let rows = std::fs::read_to_string(dir.path().join("rollout.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3);

    let doc = json(&run(&["hedge", "--config", &config("zero_claim.json"), "--cash", "0"]));
    assert_eq!(doc["worst_shortfall"].as_f64().unwrap(), 0.0);
}

#[test]
fn converge_single_level_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["converge", "--config", &config("binomial_call.json"), "--levels", "1", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["levels"].as_array().unwrap().len(), 1);
    let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn output_is_deterministic() {
    let a = run(&["price", "--config", &config("order_book_call.json")]);
    let b = run(&["price", "--config", &config("order_book_call.json"), "--threads", "1"]);
    assert_eq!(a.stdout, b.stdout);
}
