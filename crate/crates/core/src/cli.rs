//! Batch driver behind the `superhedge` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::arbitrage::check_arbitrage;
use crate::config::RunConfig;
use crate::dpp::{export, rollout};
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "superhedge", version, about = "Super-hedging prices under transaction costs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for JSON and CSV outputs.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Log progress and include timings in the output.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price the configured claim.
    Price(#[command(flatten)] Common),
    /// Report AIP / SAIP / LAIP diagnostics.
    Check(#[command(flatten)] Common),
    /// Roll the hedge policy out over every path.
    Hedge {
        #[command(flatten)]
        common: Common,
        /// Initial cash; defaults to the computed price.
        #[arg(long)]
        cash: Option<f64>,
    },
    /// Price on successively halved grid steps.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        levels: u32,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Price(c) | Command::Check(c) => c,
            Command::Hedge { common, .. } | Command::Converge { common, .. } => common,
        }
    }
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Io(_)
        | Error::LayoutMismatch(_)
        | Error::InvalidState(_)
        | Error::InvalidGrid(_)
        | Error::InvalidPayoff(_)
        | Error::NegativePayoff { .. }
        | Error::EmptySupport { .. }
        | Error::Explosion { .. } => 2,
        Error::NotHedgeable(_) => 3,
        Error::RadiusDegenerate { .. } => 4,
        _ => 5,
    }
}

/// Outcome of a command: the JSON document and the exit status.
pub struct Outcome {
    pub document: Value,
    pub code: i32,
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let common = cli.command.common();
    if common.threads > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(common.threads).build_global();
    }
    let cfg = RunConfig::from_path(&common.config)?;
    if let Some(dir) = &common.out_dir {
        fs::create_dir_all(dir)?;
    }
    let start = Instant::now();
    let (mut doc, code, name) = match &cli.command {
        Command::Price(c) => (cmd_price(&cfg, c)?, 0, "price"),
        Command::Check(_) => (cmd_check(&cfg)?, 0, "check"),
        Command::Hedge { common, cash } => (cmd_hedge(&cfg, common, *cash)?, 0, "hedge"),
        Command::Converge { common, levels } => {
            let (doc, monotone) = cmd_converge(&cfg, common, *levels)?;
            (doc, if monotone { 0 } else { 5 }, "converge")
        }
    };
    doc["command"] = json!(name);
    if common.verbose {
        doc["timing_ms"] = json!(start.elapsed().as_secs_f64() * 1e3);
    }
    if let Some(dir) = &common.out_dir {
        fs::write(dir.join(format!("{name}.json")), serde_json::to_string_pretty(&doc).unwrap())?;
    }
    Ok(Outcome { document: doc, code })
}

fn write_csv(dir: &Path, name: &str, f: impl FnOnce(fs::File) -> Result<()>) -> Result<()> {
    f(fs::File::create(dir.join(name))?)
}

pub fn cmd_price(cfg: &RunConfig, common: &Common) -> Result<Value> {
    let (problem, payoff) = cfg.build()?;
    let out = problem.solve(&payoff)?;
    log::info!("price {} on layers {:?}", out.price, problem.lattice().layer_sizes());
    let report = check_arbitrage(&problem)?;
    if let Some(dir) = &common.out_dir {
        write_csv(dir, "layers.csv", |f| export::write_layers(&problem, &out, f))?;
    }
    Ok(json!({
        "price": out.price,
        "layer_sizes": problem.lattice().layer_sizes(),
        "layers": out.diagnostics,
        "arbitrage": report,
    }))
}

pub fn cmd_check(cfg: &RunConfig) -> Result<Value> {
    let (problem, _) = cfg.build()?;
    let report = check_arbitrage(&problem)?;
    Ok(json!({
        "layer_sizes": problem.lattice().layer_sizes(),
        "arbitrage": report,
    }))
}

pub fn cmd_hedge(cfg: &RunConfig, common: &Common, cash: Option<f64>) -> Result<Value> {
    let (problem, payoff) = cfg.build()?;
    let out = problem.solve(&payoff)?;
    let cash = cash.unwrap_or(out.price);
    let report = rollout(&problem, &out, cash)?;
    if let Some(dir) = &common.out_dir {
        write_csv(dir, "rollout.csv", |f| export::write_rollout(&report, f))?;
    }
    Ok(json!({
        "price": out.price,
        "initial_cash": cash,
        "worst_shortfall": report.worst_shortfall,
        "paths": report.paths.len(),
        "held_steps": report.held_steps,
    }))
}

/// Relative tolerance when checking that refinement never raises the price.
pub const CONVERGE_TOL: f64 = 1e-9;

pub fn converge_prices(cfg: &RunConfig, levels: u32) -> Result<Vec<(Vec<f64>, f64)>> {
    if levels == 0 {
        return Err(Error::Config("levels must be >= 1".into()));
    }
    (0..levels)
        .map(|k| {
            let c = cfg.refined(k);
            let (problem, payoff) = c.build()?;
            let price = problem.solve(&payoff)?.price;
            log::info!("level {k}: price {price}");
            Ok((c.grid.axes.iter().map(|a| a.step).collect(), price))
        })
        .collect()
}

pub fn is_nonincreasing(prices: &[f64]) -> bool {
    prices.windows(2).all(|w| w[1] <= w[0] + CONVERGE_TOL * w[0].abs().max(1.0))
}

pub fn cmd_converge(cfg: &RunConfig, common: &Common, levels: u32) -> Result<(Value, bool)> {
    let rows = converge_prices(cfg, levels)?;
    let prices: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let monotone = is_nonincreasing(&prices);
    if !monotone {
        log::error!("refinement raised the price: {prices:?}");
    }
    if let Some(dir) = &common.out_dir {
        write_csv(dir, "convergence.csv", |f| export::write_convergence(&rows, f))?;
    }
    let finest = *prices.last().unwrap();
    let table: Vec<Value> = rows
        .iter()
        .map(|(step, p)| json!({"step": step, "price": p, "delta_from_finest": p - finest}))
        .collect();
    Ok((json!({"levels": table, "monotone": monotone}), monotone))
}
