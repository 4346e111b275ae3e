//! Cost and liquidation functions for the built-in market models.
//!
//! A market is described by a flat [`MarketState`] vector whose layout depends
//! on the model, and by a cost function `C_t(s, z)` giving the minimal cash
//! needed at time `t` to acquire the bundle `z`. Position index 0 is cash;
//! every model is cash invariant by construction, so only the risky part of
//! `z` is ever priced.
//!
//! State layouts, per risky asset `i` (0-based):
//!
//! | model          | block size | block contents                                              |
//! |----------------|-----------:|-------------------------------------------------------------|
//! | `Proportional` | 2          | `bid, ask`                                                  |
//! | `FixedCost`    | 3          | `bid, ask, fixed_cost`                                      |
//! | `OrderBook(k)` | `4k - 2`   | `bid_1..bid_k, ask_1..ask_k, nbid_1..nbid_{k-1}, nask_1..nask_{k-1}` |
//!
//! The order book's deepest level carries an implicit infinite quantity, so
//! it is not stored in the state.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// A point in the state space feeding the cost function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketState(pub Vec<f64>);

impl MarketState {
    pub fn new(coords: Vec<f64>) -> Self {
        MarketState(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<f64>> for MarketState {
    fn from(v: Vec<f64>) -> Self {
        MarketState(v)
    }
}

/// A portfolio: cash (the `e_1` direction) plus risky holdings in asset units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Position {
    pub cash: f64,
    pub risky: Vec<f64>,
}

impl Position {
    pub fn new(cash: f64, risky: Vec<f64>) -> Self {
        Position { cash, risky }
    }

    pub fn zero(n_risky: usize) -> Self {
        Position { cash: 0.0, risky: vec![0.0; n_risky] }
    }

    /// `(0, y)`: a purely risky bundle.
    pub fn risky_only(risky: Vec<f64>) -> Self {
        Position { cash: 0.0, risky }
    }

    /// Total dimension `d` (cash included).
    pub fn dim(&self) -> usize {
        1 + self.risky.len()
    }

    pub fn neg(&self) -> Position {
        Position {
            cash: -self.cash,
            risky: self.risky.iter().map(|x| -x).collect(),
        }
    }

    pub fn add(&self, other: &Position) -> Position {
        Position {
            cash: self.cash + other.cash,
            risky: self.risky.iter().zip(&other.risky).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Position) -> Position {
        self.add(&other.neg())
    }

    pub fn scale(&self, lambda: f64) -> Position {
        Position {
            cash: lambda * self.cash,
            risky: self.risky.iter().map(|x| lambda * x).collect(),
        }
    }

    pub fn shift_cash(&self, lambda: f64) -> Position {
        Position { cash: self.cash + lambda, risky: self.risky.clone() }
    }
}

/// One side of an order book for a single asset.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderBookSide {
    /// `(price, quantity)`; the last quantity is `f64::INFINITY`.
    pub levels: Vec<(f64, f64)>,
    /// `Q^j`, cumulative quantity of the first `j` levels, `j = 0..=k`.
    pub cumulative: Vec<f64>,
}

impl OrderBookSide {
    /// Builds a side from `k` prices and `k - 1` finite quantities.
    pub fn new(prices: &[f64], finite_quantities: &[f64]) -> Result<Self> {
        if prices.is_empty() || finite_quantities.len() + 1 != prices.len() {
            return Err(Error::LayoutMismatch(format!(
                "order book side needs k prices and k-1 quantities, got {} and {}",
                prices.len(),
                finite_quantities.len()
            )));
        }
        let mut levels = Vec::with_capacity(prices.len());
        let mut cumulative = vec![0.0];
        for (j, &p) in prices.iter().enumerate() {
            let q = finite_quantities.get(j).copied().unwrap_or(f64::INFINITY);
            if !(q > 0.0) {
                return Err(Error::InvalidState(format!("order book quantity {q} must be > 0")));
            }
            levels.push((p, q));
            let last = *cumulative.last().unwrap();
            cumulative.push(last + q);
        }
        Ok(OrderBookSide { levels, cumulative })
    }

    /// Cash paid when consuming `y >= 0` units of this side, level by level.
    pub fn consume(&self, y: f64) -> f64 {
        book_side_cost(
            self.levels.len(),
            |j| self.levels[j].0,
            |j| self.levels[j].1,
            y,
        )
    }
}

/// Increasing bijection `delta` of `[0, inf]` used in super homogeneity.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeltaLaw {
    /// `delta(x) = x`.
    Identity,
    /// Piecewise-linear through `(x, delta(x))` knots starting at `(0, 0)`;
    /// the last segment is extended linearly.
    Tabulated { knots: Vec<(f64, f64)> },
}

impl DeltaLaw {
    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 || knots[0] != (0.0, 0.0) {
            return Err(Error::Config("delta table must start at (0,0) and have >= 2 knots".into()));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                return Err(Error::Config("delta table must be strictly increasing".into()));
            }
        }
        Ok(DeltaLaw::Tabulated { knots })
    }

    pub fn apply(&self, x: f64) -> f64 {
        match self {
            DeltaLaw::Identity => x,
            DeltaLaw::Tabulated { knots } => interp_monotone(knots.iter().map(|&(a, b)| (a, b)), x),
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        match self {
            DeltaLaw::Identity => y,
            DeltaLaw::Tabulated { knots } => interp_monotone(knots.iter().map(|&(a, b)| (b, a)), y),
        }
    }
}

fn interp_monotone(knots: impl Iterator<Item = (f64, f64)> + Clone, x: f64) -> f64 {
    if x.is_infinite() {
        return x;
    }
    let pts: Vec<(f64, f64)> = knots.collect();
    let n = pts.len();
    let seg = pts
        .windows(2)
        .position(|w| x <= w[1].0)
        .unwrap_or(n - 2);
    let (x0, y0) = pts[seg];
    let (x1, y1) = pts[seg + 1];
    y0 + (x - x0) * (y1 - y0) / (x1 - x0)
}

/// Structural properties a cost model declares about itself.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostFlags {
    pub convex: bool,
    pub sub_additive: bool,
    pub super_additive: bool,
    /// `Some` when the model is positively super delta-homogeneous.
    pub delta: Option<DeltaLaw>,
}

/// What the backward recursion needs from a market.
pub trait CostFunction: Send + Sync {
    fn n_risky(&self) -> usize;

    /// `C_t(s, (0, y))`. The state is assumed valid.
    fn risky_cost(&self, t: usize, s: &[f64], y: &[f64]) -> f64;

    /// Continuous bound `h_t(s, (0, y)) >= |C_t(s, (0, y))|`, symmetric in `y`.
    fn bound(&self, t: usize, s: &[f64], y: &[f64]) -> f64;

    fn flags(&self) -> CostFlags;
}

/// A user supplied cost model.
pub trait CustomCost: Send + Sync + fmt::Debug {
    fn state_dim(&self) -> usize;
    fn n_risky(&self) -> usize;
    fn risky_cost(&self, t: usize, s: &[f64], y: &[f64]) -> f64;
    fn bound(&self, t: usize, s: &[f64], y: &[f64]) -> f64;
    fn flags(&self) -> CostFlags;

    fn validate_state(&self, _s: &[f64]) -> Result<()> {
        Ok(())
    }

    /// Price used by payoffs written on `asset`.
    fn reference_price(&self, s: &[f64], asset: usize) -> f64;

    /// Which state coordinates are prices (scaled by multiplicative supports).
    fn price_mask(&self) -> Vec<bool> {
        vec![true; self.state_dim()]
    }
}

/// The time-indexed family of cost functions.
#[derive(Debug, Clone)]
pub enum CostModel {
    OrderBook { assets: usize, depth: usize },
    Proportional { assets: usize },
    FixedCost { assets: usize },
    Custom(Arc<dyn CustomCost>),
}

const HORIZON_KMIN: i32 = 4;
const HORIZON_KMAX: i32 = 20;
const HORIZON_RTOL: f64 = 1e-9;
const HORIZON_WINDOW: usize = 3;

impl CostModel {
    pub fn order_book(assets: usize, depth: usize) -> Result<Self> {
        if assets == 0 || depth == 0 {
            return Err(Error::Config("order book needs >= 1 asset and depth >= 1".into()));
        }
        Ok(CostModel::OrderBook { assets, depth })
    }

    pub fn proportional(assets: usize) -> Result<Self> {
        if assets == 0 {
            return Err(Error::Config("proportional model needs >= 1 asset".into()));
        }
        Ok(CostModel::Proportional { assets })
    }

    pub fn fixed_cost(assets: usize) -> Result<Self> {
        if assets == 0 {
            return Err(Error::Config("fixed-cost model needs >= 1 asset".into()));
        }
        Ok(CostModel::FixedCost { assets })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            CostModel::OrderBook { .. } => "order_book",
            CostModel::Proportional { .. } => "proportional",
            CostModel::FixedCost { .. } => "fixed_cost",
            CostModel::Custom(_) => "custom",
        }
    }

    pub fn assets(&self) -> usize {
        match self {
            CostModel::OrderBook { assets, .. }
            | CostModel::Proportional { assets }
            | CostModel::FixedCost { assets } => *assets,
            CostModel::Custom(c) => c.n_risky(),
        }
    }

    fn block(&self) -> usize {
        match self {
            CostModel::OrderBook { depth, .. } => 4 * depth - 2,
            CostModel::Proportional { .. } => 2,
            CostModel::FixedCost { .. } => 3,
            CostModel::Custom(_) => 0,
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            CostModel::Custom(c) => c.state_dim(),
            _ => self.assets() * self.block(),
        }
    }

    /// Marks the price coordinates of the layout.
    pub fn price_mask(&self) -> Vec<bool> {
        match self {
            CostModel::Proportional { .. } => vec![true; self.state_dim()],
            CostModel::FixedCost { assets } => {
                (0..*assets).flat_map(|_| [true, true, false]).collect()
            }
            CostModel::OrderBook { assets, depth } => (0..*assets)
                .flat_map(|_| {
                    std::iter::repeat_n(true, 2 * depth)
                        .chain(std::iter::repeat_n(false, 2 * depth - 2))
                })
                .collect(),
            CostModel::Custom(c) => c.price_mask(),
        }
    }

    pub fn validate_state(&self, s: &MarketState) -> Result<()> {
        let s = s.coords();
        if s.len() != self.state_dim() {
            return Err(Error::LayoutMismatch(format!(
                "{} model expects a state of dimension {}, got {}",
                self.kind_name(),
                self.state_dim(),
                s.len()
            )));
        }
        if let Some(x) = s.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidState(format!("non-finite state coordinate {x}")));
        }
        let b = self.block();
        match self {
            CostModel::Proportional { assets } => {
                for i in 0..*assets {
                    let (bid, ask) = (s[b * i], s[b * i + 1]);
                    if !(bid > 0.0 && ask > 0.0) {
                        return Err(Error::InvalidState(format!("asset {i}: prices must be > 0")));
                    }
                    if bid > ask {
                        return Err(Error::InvalidState(format!("asset {i}: bid {bid} above ask {ask}")));
                    }
                }
            }
            CostModel::FixedCost { assets } => {
                for i in 0..*assets {
                    let (bid, ask, c) = (s[b * i], s[b * i + 1], s[b * i + 2]);
                    if !(bid > 0.0 && ask > 0.0) {
                        return Err(Error::InvalidState(format!("asset {i}: prices must be > 0")));
                    }
                    if bid > ask {
                        return Err(Error::InvalidState(format!("asset {i}: bid {bid} above ask {ask}")));
                    }
                    if c < 0.0 {
                        return Err(Error::InvalidState(format!("asset {i}: negative fixed cost {c}")));
                    }
                }
            }
            CostModel::OrderBook { assets, depth } => {
                let k = *depth;
                for i in 0..*assets {
                    let blk = &s[b * i..b * (i + 1)];
                    let (bids, rest) = blk.split_at(k);
                    let (asks, qty) = rest.split_at(k);
                    if bids.iter().chain(asks).any(|p| !(*p > 0.0)) {
                        return Err(Error::InvalidState(format!("asset {i}: prices must be > 0")));
                    }
                    if qty.iter().any(|q| !(*q > 0.0)) {
                        return Err(Error::InvalidState(format!("asset {i}: quantities must be > 0")));
                    }
                    if bids.windows(2).any(|w| !(w[0] > w[1])) {
                        return Err(Error::InvalidState(format!(
                            "asset {i}: bid prices must strictly decrease across levels"
                        )));
                    }
                    if asks.windows(2).any(|w| !(w[0] < w[1])) {
                        return Err(Error::InvalidState(format!(
                            "asset {i}: ask prices must strictly increase across levels"
                        )));
                    }
                    if !(bids[0] < asks[0]) {
                        return Err(Error::InvalidState(format!(
                            "asset {i}: best bid {} must be below best ask {}",
                            bids[0], asks[0]
                        )));
                    }
                }
            }
            CostModel::Custom(c) => c.validate_state(s)?,
        }
        Ok(())
    }

    fn check(&self, s: &MarketState, z: &Position) -> Result<()> {
        if z.risky.len() != self.assets() {
            return Err(Error::LayoutMismatch(format!(
                "position has {} risky coordinates, model has {} assets",
                z.risky.len(),
                self.assets()
            )));
        }
        self.validate_state(s)
    }

    /// Minimal cash needed at time `t` to acquire `z`.
    pub fn cost(&self, t: usize, s: &MarketState, z: &Position) -> Result<f64> {
        self.check(s, z)?;
        Ok(z.cash + CostFunction::risky_cost(self, t, s.coords(), &z.risky))
    }

    /// Maximal cash extractable from `z`: `L_t(z) = -C_t(-z)`.
    pub fn liquidation(&self, t: usize, s: &MarketState, z: &Position) -> Result<f64> {
        Ok(-self.cost(t, s, &z.neg())?)
    }

    /// Positively homogeneous `liminf_{a -> inf} C_t(s, a z) / a`.
    pub fn horizon_cost(&self, t: usize, s: &MarketState, z: &Position) -> Result<f64> {
        self.check(s, z)?;
        match self {
            CostModel::Custom(c) => {
                let samples: Vec<f64> = (HORIZON_KMIN..=HORIZON_KMAX)
                    .map(|k| {
                        let a = 2f64.powi(k);
                        let y: Vec<f64> = z.risky.iter().map(|v| a * v).collect();
                        c.risky_cost(t, s.coords(), &y) / a
                    })
                    .collect();
                Ok(z.cash + liminf_estimate(&samples)?)
            }
            _ => Ok(z.cash + horizon_risky(self, s.coords(), &z.risky)),
        }
    }

    /// Bound `h_t(s, z) >= |C_t(s, z)|`.
    pub fn cost_bound(&self, t: usize, s: &MarketState, z: &Position) -> Result<f64> {
        self.check(s, z)?;
        Ok(z.cash.abs() + CostFunction::bound(self, t, s.coords(), &z.risky))
    }

    /// Price of `asset` used to evaluate payoffs: the mid of the best quotes.
    pub fn reference_price(&self, s: &[f64], asset: usize) -> f64 {
        let b = self.block();
        match self {
            CostModel::Proportional { .. } | CostModel::FixedCost { .. } => {
                0.5 * (s[b * asset] + s[b * asset + 1])
            }
            CostModel::OrderBook { depth, .. } => 0.5 * (s[b * asset] + s[b * asset + depth]),
            CostModel::Custom(c) => c.reference_price(s, asset),
        }
    }

    /// Per-asset Lipschitz constant of `y -> C_t(s, (0, y))`.
    pub fn lipschitz(&self, s: &[f64]) -> Vec<f64> {
        let b = self.block();
        match self {
            CostModel::Proportional { assets } | CostModel::FixedCost { assets } => {
                (0..*assets).map(|i| s[b * i].max(s[b * i + 1])).collect()
            }
            CostModel::OrderBook { assets, depth } => {
                (0..*assets).map(|i| s[b * i + 2 * depth - 1].max(s[b * i])).collect()
            }
            CostModel::Custom(c) => {
                let n = c.n_risky();
                (0..n)
                    .map(|i| {
                        let mut e = vec![0.0; n];
                        e[i] = 1.0;
                        c.bound(0, s, &e)
                    })
                    .collect()
            }
        }
    }

    /// The enlarged conic market, when the horizon cost has a closed form.
    pub fn horizon_market(&self) -> Option<HorizonMarket<'_>> {
        match self {
            CostModel::Custom(_) => None,
            _ => Some(HorizonMarket(self)),
        }
    }

    /// Samples the cost axioms and the declared flags.
    pub fn probe_properties(
        &self,
        t: usize,
        states: &[MarketState],
        positions: &[Position],
    ) -> Result<PropertyReport> {
        probe(self, t, states, positions)
    }
}

/// Estimate of `liminf` from `C(a y)/a` sampled along `a = 2^k`: the minimum
/// over the last few points of the schedule, rejecting sequences whose tail
/// half moves both up and down beyond the relative tolerance.
fn liminf_estimate(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    let tail = &samples[n / 2..];
    let scale = tail.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let diffs: Vec<f64> = tail.windows(2).map(|w| w[1] - w[0]).collect();
    let ups = diffs.iter().any(|d| *d > HORIZON_RTOL * scale);
    let downs = diffs.iter().any(|d| *d < -HORIZON_RTOL * scale);
    if ups && downs {
        let amp = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        return Err(Error::NonConvergent(format!(
            "C(a y)/a oscillates with amplitude {amp:e} along a = 2^k"
        )));
    }
    Ok(samples[n - HORIZON_WINDOW..].iter().copied().fold(f64::INFINITY, f64::min))
}

/// Closed-form horizon cost of a built-in model, risky part only.
fn horizon_risky(model: &CostModel, s: &[f64], y: &[f64]) -> f64 {
    let b = model.block();
    match model {
        CostModel::Proportional { .. } => CostFunction::risky_cost(model, 0, s, y),
        CostModel::FixedCost { .. } => y
            .iter()
            .enumerate()
            .map(|(i, &v)| v.max(0.0) * s[b * i + 1] - (-v).max(0.0) * s[b * i])
            .sum(),
        CostModel::OrderBook { depth, .. } => y
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let worst_bid = s[b * i + depth - 1];
                let worst_ask = s[b * i + 2 * depth - 1];
                v.max(0.0) * worst_ask - (-v).max(0.0) * worst_bid
            })
            .sum(),
        CostModel::Custom(_) => unreachable!("custom horizon is numerical"),
    }
}

/// Cost of consuming `y >= 0` units from a book side with `k` levels:
/// `sum_{r<=j} N_r S_r + (y - Q_j) S_{j+1}` for `Q_j < y <= Q_{j+1}`.
fn book_side_cost(k: usize, price: impl Fn(usize) -> f64, qty: impl Fn(usize) -> f64, y: f64) -> f64 {
    let mut filled = 0.0;
    let mut cumulative = 0.0;
    for j in 0..k {
        let q = if j + 1 == k { f64::INFINITY } else { qty(j) };
        let next = cumulative + q;
        if y <= next {
            return filled + (y - cumulative) * price(j);
        }
        filled += q * price(j);
        cumulative = next;
    }
    unreachable!("last level has infinite quantity")
}

impl CostFunction for CostModel {
    fn n_risky(&self) -> usize {
        self.assets()
    }

    fn risky_cost(&self, t: usize, s: &[f64], y: &[f64]) -> f64 {
        let b = self.block();
        match self {
            CostModel::Proportional { .. } => y
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    if v >= 0.0 {
                        v * s[b * i + 1]
                    } else {
                        v * s[b * i]
                    }
                })
                .sum(),
            CostModel::FixedCost { .. } => y
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let (bid, ask, c) = (s[b * i], s[b * i + 1], s[b * i + 2]);
                    if v > 0.0 {
                        v * ask + c
                    } else if v < 0.0 {
                        -((-v) * bid - c).max(0.0)
                    } else {
                        0.0
                    }
                })
                .sum(),
            CostModel::OrderBook { depth, .. } => {
                let k = *depth;
                y.iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let blk = &s[b * i..b * (i + 1)];
                        let bids = &blk[..k];
                        let asks = &blk[k..2 * k];
                        let nbid = &blk[2 * k..3 * k - 1];
                        let nask = &blk[3 * k - 1..];
                        if v >= 0.0 {
                            book_side_cost(k, |j| asks[j], |j| nask[j], v)
                        } else {
                            -book_side_cost(k, |j| bids[j], |j| nbid[j], -v)
                        }
                    })
                    .sum()
            }
            CostModel::Custom(c) => c.risky_cost(t, s, y),
        }
    }

    fn bound(&self, t: usize, s: &[f64], y: &[f64]) -> f64 {
        let b = self.block();
        match self {
            CostModel::Custom(c) => c.bound(t, s, y),
            CostModel::FixedCost { .. } => y
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let fixed = if v != 0.0 { s[b * i + 2] } else { 0.0 };
                    v.abs() * s[b * i].max(s[b * i + 1]) + fixed
                })
                .sum(),
            _ => {
                let lip = self.lipschitz(s);
                y.iter().zip(lip).map(|(v, l)| v.abs() * l).sum()
            }
        }
    }

    fn flags(&self) -> CostFlags {
        match self {
            CostModel::Proportional { .. } => CostFlags {
                convex: true,
                sub_additive: true,
                super_additive: false,
                delta: Some(DeltaLaw::Identity),
            },
            CostModel::OrderBook { .. } => CostFlags {
                convex: true,
                sub_additive: false,
                super_additive: false,
                delta: Some(DeltaLaw::Identity),
            },
            CostModel::FixedCost { .. } => CostFlags {
                convex: false,
                sub_additive: true,
                super_additive: false,
                delta: None,
            },
            CostModel::Custom(c) => c.flags(),
        }
    }
}

/// The enlarged market priced by the horizon cost of a built-in model.
#[derive(Debug, Clone, Copy)]
pub struct HorizonMarket<'a>(pub &'a CostModel);

impl CostFunction for HorizonMarket<'_> {
    fn n_risky(&self) -> usize {
        self.0.assets()
    }

    fn risky_cost(&self, _t: usize, s: &[f64], y: &[f64]) -> f64 {
        horizon_risky(self.0, s, y)
    }

    fn bound(&self, _t: usize, s: &[f64], y: &[f64]) -> f64 {
        let lip = self.0.lipschitz(s);
        y.iter().zip(lip).map(|(v, l)| v.abs() * l).sum()
    }

    fn flags(&self) -> CostFlags {
        // Sub-additivity of the horizon cost needs convexity of each
        // one-dimensional slope pair, which holds when ask >= bid.
        CostFlags {
            convex: true,
            sub_additive: true,
            super_additive: false,
            delta: Some(DeltaLaw::Identity),
        }
    }
}

/// Outcome of one sampled axiom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub name: &'static str,
    /// Whether the model claims this property (the cost axioms always are).
    pub declared: bool,
    pub evaluated: usize,
    pub violations: usize,
    pub worst_violation: f64,
}

impl AxiomCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub checks: Vec<AxiomCheck>,
}

impl PropertyReport {
    pub fn get(&self, name: &str) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn declared_pass(&self) -> bool {
        self.checks.iter().filter(|c| c.declared).all(AxiomCheck::passed)
    }
}

const PROBE_ATOL: f64 = 1e-9;
const PROBE_RTOL: f64 = 1e-9;
const PROBE_LAMBDAS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, 10.0];
const PROBE_CASH_SHIFTS: [f64; 3] = [-3.5, 1.0, 3.5];

struct Tally {
    check: AxiomCheck,
}

impl Tally {
    fn new(name: &'static str, declared: bool) -> Self {
        Tally {
            check: AxiomCheck { name, declared, evaluated: 0, violations: 0, worst_violation: 0.0 },
        }
    }

    /// Records `lhs <= rhs` up to the probe tolerance.
    fn le(&mut self, lhs: f64, rhs: f64) {
        self.check.evaluated += 1;
        let excess = lhs - rhs;
        let tol = PROBE_ATOL + PROBE_RTOL * lhs.abs().max(rhs.abs());
        if excess > tol {
            self.check.violations += 1;
            self.check.worst_violation = self.check.worst_violation.max(excess);
        }
    }

    fn eq(&mut self, lhs: f64, rhs: f64) {
        self.check.evaluated += 1;
        let err = (lhs - rhs).abs();
        let tol = PROBE_ATOL + PROBE_RTOL * lhs.abs().max(rhs.abs());
        if err > tol {
            self.check.violations += 1;
            self.check.worst_violation = self.check.worst_violation.max(err);
        }
    }
}

fn probe(model: &CostModel, t: usize, states: &[MarketState], positions: &[Position]) -> Result<PropertyReport> {
    if states.is_empty() || positions.is_empty() {
        return Err(Error::Config("probe_properties needs nonempty samples".into()));
    }
    let flags = CostFunction::flags(model);
    let delta = flags.delta.clone().unwrap_or(DeltaLaw::Identity);
    let mut zero = Tally::new("zero_at_origin", true);
    let mut cash = Tally::new("cash_invariance", true);
    let mut bound = Tally::new("bounded_by_h", true);
    let mut monotone = Tally::new("monotone_in_positive_orthant", true);
    let mut sub = Tally::new("sub_additive", flags.sub_additive);
    let mut sup = Tally::new("super_additive", flags.super_additive);
    let mut homog = Tally::new("super_delta_homogeneous", flags.delta.is_some());
    let mut convex = Tally::new("convex", flags.convex);

    let n = model.assets();
    for s in states {
        let c = |z: &Position| model.cost(t, s, z);
        zero.eq(c(&Position::zero(n))?, 0.0);
        for (k, x) in positions.iter().enumerate() {
            let y = &positions[(k + 1) % positions.len()];
            let cx = c(x)?;
            let cy = c(y)?;
            for lam in PROBE_CASH_SHIFTS {
                cash.eq(c(&x.shift_cash(lam))?, cx + lam);
            }
            bound.le(cx.abs(), model.cost_bound(t, s, x)?);
            let up = Position::new(y.cash.abs(), y.risky.iter().map(|v| v.abs()).collect());
            monotone.le(cx, c(&x.add(&up))?);
            let cxy = c(&x.add(y))?;
            sub.le(cxy, cx + cy);
            sup.le(cx + cy, cxy);
            for lam in PROBE_LAMBDAS {
                homog.le(delta.apply(lam) * cx, c(&x.scale(lam))?);
            }
            let mid = x.add(y).scale(0.5);
            convex.le(c(&mid)?, 0.5 * (cx + cy));
        }
    }
    Ok(PropertyReport {
        checks: vec![zero, cash, bound, monotone, sub, sup, homog, convex]
            .into_iter()
            .map(|t| t.check)
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ob_state() -> MarketState {
        // bids 9, 8; asks 10, 11; bid qty 4; ask qty 5
        MarketState::new(vec![9.0, 8.0, 10.0, 11.0, 4.0, 5.0])
    }

    fn pos(cash: f64, y: f64) -> Position {
        Position::new(cash, vec![y])
    }

    #[test]
    fn order_book_buy_walks_levels() {
        let m = CostModel::order_book(1, 2).unwrap();
        assert_eq!(m.cost(0, &ob_state(), &pos(0.0, 7.0)).unwrap(), 72.0);
        // sell 6: 4 at 9 then 2 at 8
        assert_eq!(m.cost(0, &ob_state(), &pos(0.0, -6.0)).unwrap(), -52.0);
    }

    #[test]
    fn order_book_side_consume_matches_cost() {
        let side = OrderBookSide::new(&[10.0, 11.0], &[5.0]).unwrap();
        assert_eq!(side.levels.last().unwrap().1, f64::INFINITY);
        assert_eq!(side.cumulative[1], 5.0);
        assert_eq!(side.consume(7.0), 72.0);
        assert_eq!(side.consume(5.0), 50.0);
    }

    #[test]
    fn proportional_sell_at_bid() {
        let m = CostModel::proportional(1).unwrap();
        let s = MarketState::new(vec![9.0, 10.0]);
        assert_eq!(m.cost(0, &s, &pos(0.0, -4.0)).unwrap(), -36.0);
        assert_eq!(m.cost(0, &s, &pos(0.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn cash_invariance_and_liquidation_duality() {
        let m = CostModel::proportional(1).unwrap();
        let s = MarketState::new(vec![9.0, 10.0]);
        let z = pos(1.25, 2.0);
        let c = m.cost(0, &s, &z).unwrap();
        assert_eq!(m.cost(0, &s, &z.shift_cash(3.5)).unwrap() - c, 3.5);
        assert_eq!(m.liquidation(0, &s, &z).unwrap(), -m.cost(0, &s, &z.neg()).unwrap());
    }

    #[test]
    fn fixed_cost_liquidation_clamps() {
        let m = CostModel::fixed_cost(1).unwrap();
        let s = MarketState::new(vec![9.0, 10.0, 1.0]);
        assert_eq!(m.liquidation(0, &s, &pos(0.0, 2.0)).unwrap(), 17.0);
        assert_eq!(m.liquidation(0, &s, &pos(0.0, 0.05)).unwrap(), 0.0);
        assert_eq!(m.cost(0, &s, &pos(0.0, 2.0)).unwrap(), 21.0);
        assert_eq!(m.horizon_cost(0, &s, &pos(0.0, 2.0)).unwrap(), 20.0);
        assert_eq!(m.horizon_cost(0, &s, &pos(0.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn fixed_cost_liquidation_jumps_near_zero() {
        let m = CostModel::fixed_cost(1).unwrap();
        let s = MarketState::new(vec![9.0, 10.0, 1.0]);
        // one-sided limit from above of the liquidation value is 0 while the
        // cost of buying stays above the fixed fee
        for k in 1..30 {
            let y = 2f64.powi(-k);
            assert_eq!(m.liquidation(0, &s, &pos(0.0, y)).unwrap(), (9.0 * y - 1.0).max(0.0));
            assert!(m.cost(0, &s, &pos(0.0, y)).unwrap() >= 1.0);
        }
        assert_eq!(m.cost(0, &s, &pos(0.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn proportional_horizon_equals_cost() {
        let m = CostModel::proportional(2).unwrap();
        let s = MarketState::new(vec![9.0, 10.0, 20.0, 21.5]);
        for z in [Position::new(0.5, vec![1.0, -2.0]), Position::new(0.0, vec![-3.0, 0.25])] {
            assert_eq!(m.horizon_cost(0, &s, &z).unwrap(), m.cost(0, &s, &z).unwrap());
        }
    }

    #[derive(Debug)]
    struct QuadraticImpact;

    impl CustomCost for QuadraticImpact {
        fn state_dim(&self) -> usize {
            1
        }
        fn n_risky(&self) -> usize {
            1
        }
        fn risky_cost(&self, _t: usize, s: &[f64], y: &[f64]) -> f64 {
            s[0] * y[0] + 0.5 * y[0] * y[0].abs() / (1.0 + y[0].abs())
        }
        fn bound(&self, _t: usize, s: &[f64], y: &[f64]) -> f64 {
            (s[0] + 0.5) * y[0].abs()
        }
        fn flags(&self) -> CostFlags {
            CostFlags { convex: false, sub_additive: false, super_additive: false, delta: None }
        }
        fn reference_price(&self, s: &[f64], _asset: usize) -> f64 {
            s[0]
        }
    }

    #[derive(Debug)]
    struct Oscillating;

    impl CustomCost for Oscillating {
        fn state_dim(&self) -> usize {
            1
        }
        fn n_risky(&self) -> usize {
            1
        }
        fn risky_cost(&self, _t: usize, s: &[f64], y: &[f64]) -> f64 {
            let a = y[0].abs().log2().round() as i64;
            s[0] * y[0] * if a % 2 == 0 { 1.0 } else { 2.0 }
        }
        fn bound(&self, _t: usize, s: &[f64], y: &[f64]) -> f64 {
            2.0 * s[0] * y[0].abs()
        }
        fn flags(&self) -> CostFlags {
            CostFlags { convex: false, sub_additive: false, super_additive: false, delta: None }
        }
        fn reference_price(&self, s: &[f64], _asset: usize) -> f64 {
            s[0]
        }
    }

    #[test]
    fn custom_horizon_numerical_liminf() {
        let m = CostModel::Custom(Arc::new(QuadraticImpact));
        let s = MarketState::new(vec![10.0]);
        // C(a y)/a -> 10 y + 0.5 sign(y) |y|
        let h = m.horizon_cost(0, &s, &pos(0.0, 1.0)).unwrap();
        assert!((h - 10.5).abs() < 1e-4, "{h}");
        let h = m.horizon_cost(0, &s, &pos(0.0, -1.0)).unwrap();
        assert!((h + 10.5).abs() < 1e-4, "{h}");
        assert!(m.horizon_market().is_none());
    }

    #[test]
    fn custom_horizon_rejects_oscillation() {
        let m = CostModel::Custom(Arc::new(Oscillating));
        let s = MarketState::new(vec![10.0]);
        let err = m.horizon_cost(0, &s, &pos(0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::NonConvergent(_)));
    }

    #[test]
    fn delta_table_round_trips() {
        let d = DeltaLaw::tabulated(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 4.0), (3.0, 9.0)]).unwrap();
        assert_eq!(d.apply(1.5), 2.5);
        assert_eq!(d.inverse(2.5), 1.5);
        assert_eq!(d.apply(4.0), 14.0);
        assert_eq!(d.inverse(14.0), 4.0);
        assert_eq!(d.apply(f64::INFINITY), f64::INFINITY);
        assert!(DeltaLaw::tabulated(vec![(0.0, 0.0), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn state_validation() {
        let ob = CostModel::order_book(1, 2).unwrap();
        assert!(matches!(
            ob.cost(0, &MarketState::new(vec![9.0, 8.0]), &pos(0.0, 1.0)),
            Err(Error::LayoutMismatch(_))
        ));
        let crossed = MarketState::new(vec![10.5, 8.0, 10.0, 11.0, 4.0, 5.0]);
        assert!(matches!(ob.cost(0, &crossed, &pos(0.0, 1.0)), Err(Error::InvalidState(_))));
        let flat_asks = MarketState::new(vec![9.0, 8.0, 10.0, 10.0, 4.0, 5.0]);
        assert!(matches!(ob.validate_state(&flat_asks), Err(Error::InvalidState(_))));
        let p = CostModel::proportional(1).unwrap();
        assert!(matches!(
            p.cost(0, &MarketState::new(vec![9.0, 10.0]), &Position::new(0.0, vec![1.0, 2.0])),
            Err(Error::LayoutMismatch(_))
        ));
        assert!(p.validate_state(&MarketState::new(vec![-1.0, 10.0])).is_err());
    }

    fn sample_positions() -> Vec<Position> {
        let mut out = Vec::new();
        for k in 0..40 {
            let y = ((k * 37 % 23) as f64 - 11.0) * 0.73;
            out.push(pos((k % 5) as f64 - 2.0, y));
        }
        out
    }

    #[test]
    fn probe_order_book() {
        let m = CostModel::order_book(1, 2).unwrap();
        let r = m.probe_properties(0, &[ob_state()], &sample_positions()).unwrap();
        assert!(r.declared_pass(), "{r:?}");
        assert!(r.get("super_delta_homogeneous").unwrap().passed());
        assert!(r.get("convex").unwrap().passed());
    }

    #[test]
    fn probe_fixed_cost_fails_homogeneity() {
        let m = CostModel::fixed_cost(1).unwrap();
        let s = MarketState::new(vec![9.0, 10.0, 1.0]);
        let r = m.probe_properties(0, &[s], &sample_positions()).unwrap();
        assert!(r.get("sub_additive").unwrap().passed());
        assert!(!r.get("super_delta_homogeneous").unwrap().passed());
        assert!(r.declared_pass());
    }

    #[test]
    fn probe_proportional() {
        let m = CostModel::proportional(1).unwrap();
        let s = MarketState::new(vec![9.0, 10.0]);
        let r = m.probe_properties(0, &[s], &sample_positions()).unwrap();
        for name in ["convex", "sub_additive", "super_delta_homogeneous", "cash_invariance"] {
            assert!(r.get(name).unwrap().passed(), "{name}");
        }
    }
}
