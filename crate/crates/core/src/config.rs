//! JSON run configuration.
//!
//! ```json
//! {
//!   "horizon": 1,
//!   "market": { "kind": "proportional", "assets": 1 },
//!   "initial_state": [100, 100],
//!   "support": { "kind": "multiplicative", "factors": [0.8, 1.2] },
//!   "payoff": { "kind": "cash_settled_call", "asset": 0, "strike": 100 },
//!   "grid": { "axes": [ { "min": -2, "max": 2, "step": 0.001 } ] }
//! }
//! ```
//!
//! Scalar support entries act on the price coordinates of the market layout
//! only (volumes and fixed fees are left unchanged). Relative CSV paths are
//! resolved against the directory holding the configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dpp::{FallbackRadius, GridAxis, HedgingProblem, PositionGrid, SolverConfig};
use crate::error::{Error, Result};
use crate::market::{CostModel, MarketState};
use crate::payoff::Payoff;
use crate::support::{SupportModel, TableRow, DEFAULT_NODE_CAP, DEFAULT_RECOMBINATION_TOL};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: usize,
    pub market: MarketSpec,
    pub initial_state: Vec<f64>,
    pub support: SupportSpec,
    pub payoff: PayoffSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub fallback_radius: FallbackSpec,
    #[serde(default = "default_node_cap")]
    pub max_layer_nodes: usize,
    #[serde(default = "default_sphere_samples")]
    pub sphere_samples: usize,
    #[serde(default)]
    pub laip_reduction: bool,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_node_cap() -> usize {
    DEFAULT_NODE_CAP
}

fn default_sphere_samples() -> usize {
    128
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarketSpec {
    Proportional { assets: usize },
    OrderBook { assets: usize, depth: usize },
    FixedCost { assets: usize },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TableRowSpec {
    pub t: usize,
    pub parent: Vec<f64>,
    pub child: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SupportSpec {
    Multiplicative { factors: Vec<VectorSpec> },
    Additive { increments: Vec<VectorSpec> },
    Table {
        #[serde(default)]
        csv: Option<PathBuf>,
        #[serde(default)]
        rows: Option<Vec<TableRowSpec>>,
    },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffSpec {
    CashSettledCall {
        #[serde(default)]
        asset: usize,
        strike: f64,
    },
    CashSettledPut {
        #[serde(default)]
        asset: usize,
        strike: f64,
    },
    PhysicalCall {
        #[serde(default)]
        asset: usize,
        strike: f64,
        #[serde(default)]
        strike_prepaid: bool,
    },
    Basket { weights: Vec<f64>, strike: f64 },
    CustomTable {
        #[serde(default)]
        csv: Option<PathBuf>,
        #[serde(default)]
        values: Option<Vec<Vec<f64>>>,
    },
    Zero,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub axes: Vec<AxisSpec>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_tol")]
    pub aip: f64,
    #[serde(default = "default_tol")]
    pub saip: f64,
    #[serde(default = "default_recombination")]
    pub recombination: f64,
    #[serde(default = "default_radius_eps")]
    pub radius_eps: f64,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_recombination() -> f64 {
    DEFAULT_RECOMBINATION_TOL
}

fn default_radius_eps() -> f64 {
    1e-10
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            aip: default_tol(),
            saip: default_tol(),
            recombination: default_recombination(),
            radius_eps: default_radius_eps(),
        }
    }
}

/// `"auto"`, a number, or `null` (no fallback).
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum FallbackSpec {
    Radius(f64),
    Keyword(String),
    Disabled(()),
}

impl Default for FallbackSpec {
    fn default() -> Self {
        FallbackSpec::Keyword("auto".into())
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json_str(&text, &base)
    }

    pub fn from_json_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn cost_model(&self) -> Result<CostModel> {
        match self.market {
            MarketSpec::Proportional { assets } => CostModel::proportional(assets),
            MarketSpec::OrderBook { assets, depth } => CostModel::order_book(assets, depth),
            MarketSpec::FixedCost { assets } => CostModel::fixed_cost(assets),
        }
    }

    pub fn support_model(&self, market: &CostModel) -> Result<SupportModel> {
        let mask = market.price_mask();
        let expand = |v: &VectorSpec, neutral: f64| -> Vec<f64> {
            match v {
                VectorSpec::Scalar(x) => mask.iter().map(|p| if *p { *x } else { neutral }).collect(),
                VectorSpec::Vector(v) => v.clone(),
            }
        };
        match &self.support {
            SupportSpec::Multiplicative { factors } => Ok(SupportModel::Multiplicative {
                factors: factors.iter().map(|f| expand(f, 1.0)).collect(),
            }),
            SupportSpec::Additive { increments } => Ok(SupportModel::Additive {
                increments: increments.iter().map(|a| expand(a, 0.0)).collect(),
            }),
            SupportSpec::Table { csv, rows } => {
                let rows = match (csv, rows) {
                    (Some(path), None) => read_table_csv(&self.resolve(path), self.initial_state.len())?,
                    (None, Some(rows)) => rows
                        .iter()
                        .map(|r| TableRow { t: r.t, parent: r.parent.clone(), child: r.child.clone() })
                        .collect(),
                    _ => return Err(Error::Config("table support needs exactly one of `csv` or `rows`".into())),
                };
                Ok(SupportModel::Table { rows, tol: self.tolerances.recombination })
            }
        }
    }

    pub fn payoff(&self) -> Result<Payoff> {
        Ok(match &self.payoff {
            PayoffSpec::CashSettledCall { asset, strike } => Payoff::CashSettledCall { asset: *asset, strike: *strike },
            PayoffSpec::CashSettledPut { asset, strike } => Payoff::CashSettledPut { asset: *asset, strike: *strike },
            PayoffSpec::PhysicalCall { asset, strike, strike_prepaid } => Payoff::PhysicalCall {
                asset: *asset,
                strike: *strike,
                strike_prepaid: *strike_prepaid,
            },
            PayoffSpec::Basket { weights, strike } => Payoff::Basket { weights: weights.clone(), strike: *strike },
            PayoffSpec::CustomTable { csv, values } => match (csv, values) {
                (Some(path), None) => Payoff::CustomTable { values: read_payoff_csv(&self.resolve(path))? },
                (None, Some(v)) => Payoff::CustomTable { values: v.clone() },
                _ => return Err(Error::Config("custom_table payoff needs exactly one of `csv` or `values`".into())),
            },
            PayoffSpec::Zero => Payoff::Zero,
        })
    }

    pub fn grid(&self) -> Result<PositionGrid> {
        PositionGrid::new(
            self.grid
                .axes
                .iter()
                .map(|a| GridAxis::new(a.min, a.max, a.step))
                .collect::<Result<_>>()?,
        )
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let fallback = match &self.fallback_radius {
            FallbackSpec::Radius(r) if *r > 0.0 => FallbackRadius::Fixed(*r),
            FallbackSpec::Radius(r) => {
                return Err(Error::Config(format!("fallback_radius must be > 0, got {r}")))
            }
            FallbackSpec::Keyword(k) if k == "auto" => FallbackRadius::Auto,
            FallbackSpec::Keyword(k) => {
                return Err(Error::Config(format!("fallback_radius must be \"auto\", a number or null, got {k:?}")))
            }
            FallbackSpec::Disabled(()) => FallbackRadius::Disabled,
        };
        Ok(SolverConfig {
            tol_aip: self.tolerances.aip,
            tol_saip: self.tolerances.saip,
            radius_eps: self.tolerances.radius_eps,
            recombination_tol: self.tolerances.recombination,
            node_cap: self.max_layer_nodes,
            fallback,
            sphere_samples: self.sphere_samples,
            laip_reduction: self.laip_reduction,
        })
    }

    /// Builds the hedging problem and the claim.
    pub fn build(&self) -> Result<(HedgingProblem, Payoff)> {
        let market = self.cost_model()?;
        let s0 = MarketState::new(self.initial_state.clone());
        market.validate_state(&s0)?;
        let support = self.support_model(&market)?;
        let problem = HedgingProblem::new(market, support, s0, self.horizon, self.grid()?, self.solver_config()?)?;
        Ok((problem, self.payoff()?))
    }

    /// The same configuration with every grid step divided by `2^level`.
    pub fn refined(&self, level: u32) -> RunConfig {
        let mut c = self.clone();
        let f = 2f64.powi(level as i32);
        for a in &mut c.grid.axes {
            a.step /= f;
        }
        c
    }
}

/// Rows `t, parent_0..parent_{m-1}, child_0..child_{m-1}`, with a header.
pub fn read_table_csv(path: &Path, m: usize) -> Result<Vec<TableRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 1 + 2 * m {
            return Err(Error::Config(format!(
                "{}: expected {} columns (t, {m} parent, {m} child), got {}",
                path.display(),
                1 + 2 * m,
                rec.len()
            )));
        }
        let nums = parse_floats(path, &rec)?;
        rows.push(TableRow { t: nums[0] as usize, parent: nums[1..=m].to_vec(), child: nums[m + 1..].to_vec() });
    }
    Ok(rows)
}

/// Rows `node_id, g_0..g_{d-1}`, with a header; ids must be 0..n in order.
pub fn read_payoff_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let nums = parse_floats(path, &rec?)?;
        if nums.first() != Some(&(i as f64)) {
            return Err(Error::Config(format!("{}: row {i} must have node_id {i}", path.display())));
        }
        out.push(nums[1..].to_vec());
    }
    Ok(out)
}

fn parse_floats(path: &Path, rec: &csv::StringRecord) -> Result<Vec<f64>> {
    rec.iter()
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{}: cannot parse {f:?} as a number", path.display())))
        })
        .collect()
}
