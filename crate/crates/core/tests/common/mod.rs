#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use superhedge::config::RunConfig;
use superhedge::dpp::{HedgingProblem, PositionGrid, SolverConfig};
use superhedge::market::{CostModel, MarketState};
use superhedge::payoff::Payoff;
use superhedge::support::SupportModel;

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn load(name: &str) -> RunConfig {
    RunConfig::from_path(&configs_dir().join(name)).unwrap()
}

pub fn shipped_configs() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(configs_dir())
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().into_string().unwrap();
            name.ends_with(".json").then_some(name)
        })
        .collect();
    names.sort();
    names
}

pub fn binomial(model: CostModel, state: Vec<f64>, horizon: usize, grid: PositionGrid) -> HedgingProblem {
    let m = state.len();
    let factor = |f: f64| (0..m).map(|i| if model.price_mask()[i] { f } else { 1.0 }).collect();
    HedgingProblem::new(
        model.clone(),
        SupportModel::Multiplicative { factors: vec![factor(0.8), factor(1.2)] },
        MarketState::new(state),
        horizon,
        grid,
        SolverConfig::default(),
    )
    .unwrap()
}

/// Bid/ask quotes around `mid` with total spread `eps`.
pub fn proportional_call(eps: f64, step: f64) -> (HedgingProblem, Payoff) {
    let p = binomial(
        CostModel::proportional(1).unwrap(),
        vec![100.0 - eps / 2.0, 100.0 + eps / 2.0],
        1,
        PositionGrid::uniform(1, -2.0, 2.0, step).unwrap(),
    );
    (p, Payoff::CashSettledCall { asset: 0, strike: 100.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Frictionless,
    Proportional,
    OrderBook,
    FixedCost,
}

pub const KINDS: [Kind; 4] = [Kind::Frictionless, Kind::Proportional, Kind::OrderBook, Kind::FixedCost];

/// A small random instance that the enumeration oracle can handle.
pub struct Instance {
    pub kind: Kind,
    pub problem: HedgingProblem,
    pub payoff: Payoff,
}

fn decision_nodes(branching: usize, horizon: usize) -> u32 {
    (0..horizon).map(|t| branching.pow(t as u32)).sum::<usize>() as u32
}

pub fn random_instance(rng: &mut ChaCha8Rng, kind: Kind, budget: u64) -> Instance {
    let horizon = rng.gen_range(1..=3);
    let branching = rng.gen_range(2..=3);
    let mid = rng.gen_range(80.0..120.0f64);
    let round = |x: f64| (x * 100.0).round() / 100.0;
    let (model, state) = match kind {
        Kind::Frictionless => (CostModel::proportional(1).unwrap(), vec![mid, mid]),
        Kind::Proportional => {
            let h = round(rng.gen_range(0.05..2.0));
            (CostModel::proportional(1).unwrap(), vec![mid - h, mid + h])
        }
        Kind::OrderBook => {
            let h = round(rng.gen_range(0.05..1.0));
            let gap = round(rng.gen_range(0.1..1.5));
            let q = [0.25, 0.5, 1.0][rng.gen_range(0..3)];
            let qa = [0.25, 0.5, 1.0][rng.gen_range(0..3)];
            (
                CostModel::order_book(1, 2).unwrap(),
                vec![mid - h, mid - h - gap, mid + h, mid + h + gap, q, qa],
            )
        }
        Kind::FixedCost => {
            let h = round(rng.gen_range(0.05..1.0));
            let c = round(rng.gen_range(0.0..1.0));
            (CostModel::fixed_cost(1).unwrap(), vec![mid - h, mid + h, c])
        }
    };
    let mask = model.price_mask();
    let down = round(rng.gen_range(0.75..0.95));
    let up = round(rng.gen_range(1.05..1.3));
    let mut scalars = vec![down, up];
    if branching == 3 {
        scalars.insert(1, round(rng.gen_range(down + 0.02..up - 0.02)));
    }
    let factors = scalars
        .iter()
        .map(|&f| mask.iter().map(|&p| if p { f } else { 1.0 }).collect())
        .collect();

    // largest odd grid within the strategy budget, at most 21 points
    let d = decision_nodes(branching, horizon);
    let mut n = 21u64;
    while n > 3 && n.pow(d) > budget {
        n -= 2;
    }
    let half = (n - 1) / 2;
    let extent = [0.5, 1.0, 1.5][rng.gen_range(0..3)];
    let step = extent / half as f64;
    let grid = PositionGrid::uniform(1, -(half as f64) * step, half as f64 * step, step).unwrap();

    let strike = round(rng.gen_range(0.85..1.15) * mid);
    let payoff = match rng.gen_range(0..3) {
        0 => Payoff::CashSettledCall { asset: 0, strike },
        1 => Payoff::CashSettledPut { asset: 0, strike },
        _ => Payoff::Zero,
    };
    let problem = HedgingProblem::new(
        model,
        SupportModel::Multiplicative { factors },
        MarketState::new(state),
        horizon,
        grid,
        SolverConfig::default(),
    )
    .unwrap();
    Instance { kind, problem, payoff }
}
