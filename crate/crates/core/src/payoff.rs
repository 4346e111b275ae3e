//! European claims `xi = g(S_T)` with nonnegative vector values.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{CostModel, MarketState, Position};
use crate::support::SupportLattice;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payoff {
    /// `((p - K)^+, 0, ..., 0)` on the reference price of `asset`.
    CashSettledCall { asset: usize, strike: f64 },
    /// `((K - p)^+, 0, ..., 0)`.
    CashSettledPut { asset: usize, strike: f64 },
    /// One unit of `asset` delivered when `p >= K`, with the strike already
    /// paid up front. Only the prepaid convention keeps `g >= 0`.
    PhysicalCall { asset: usize, strike: f64, strike_prepaid: bool },
    /// `((sum_i w_i p_i - K)^+, 0, ..., 0)`.
    Basket { weights: Vec<f64>, strike: f64 },
    /// One row of `d` coordinates per terminal node id.
    CustomTable { values: Vec<Vec<f64>> },
    /// The zero claim.
    Zero,
}

impl Payoff {
    pub fn validate(&self, model: &CostModel) -> Result<()> {
        let n = model.assets();
        match self {
            Payoff::CashSettledCall { asset, strike }
            | Payoff::CashSettledPut { asset, strike }
            | Payoff::PhysicalCall { asset, strike, .. } => {
                if *asset >= n {
                    return Err(Error::InvalidPayoff(format!("asset {asset} out of range (model has {n})")));
                }
                if !strike.is_finite() {
                    return Err(Error::InvalidPayoff("strike must be finite".into()));
                }
            }
            Payoff::Basket { weights, strike } => {
                if weights.len() != n {
                    return Err(Error::InvalidPayoff(format!(
                        "basket has {} weights, model has {n} assets",
                        weights.len()
                    )));
                }
                if !strike.is_finite() || weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::InvalidPayoff("basket parameters must be finite".into()));
                }
            }
            Payoff::CustomTable { values } => {
                if let Some(row) = values.iter().find(|r| r.len() != n + 1) {
                    return Err(Error::InvalidPayoff(format!(
                        "payoff row has {} coordinates, expected {}",
                        row.len(),
                        n + 1
                    )));
                }
            }
            Payoff::Zero => {}
        }
        if let Payoff::PhysicalCall { strike_prepaid: false, .. } = self {
            return Err(Error::InvalidPayoff(
                "physical call with an unpaid strike has a negative cash leg; \
                 set strike_prepaid or fold the strike into a custom table"
                    .into(),
            ));
        }
        Ok(())
    }

    /// `g(s)` for the terminal state `s` with id `node`.
    pub fn payoff_vector(&self, model: &CostModel, s: &MarketState, node: usize) -> Result<Position> {
        let n = model.assets();
        let price = |i: usize| model.reference_price(s.coords(), i);
        let cash = |c: f64| Ok(Position::new(c, vec![0.0; n]));
        match self {
            Payoff::CashSettledCall { asset, strike } => cash((price(*asset) - strike).max(0.0)),
            Payoff::CashSettledPut { asset, strike } => cash((strike - price(*asset)).max(0.0)),
            Payoff::PhysicalCall { asset, strike, .. } => {
                let mut risky = vec![0.0; n];
                if price(*asset) >= *strike {
                    risky[*asset] = 1.0;
                }
                Ok(Position::new(0.0, risky))
            }
            Payoff::Basket { weights, strike } => {
                let v: f64 = weights.iter().enumerate().map(|(i, w)| w * price(i)).sum();
                cash((v - strike).max(0.0))
            }
            Payoff::CustomTable { values } => {
                let row = values.get(node).ok_or_else(|| {
                    Error::InvalidPayoff(format!("no payoff row for terminal node {node}"))
                })?;
                if let Some(v) = row.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                    return Err(Error::NegativePayoff { node, value: *v });
                }
                Ok(Position::new(row[0], row[1..].to_vec()))
            }
            Payoff::Zero => cash(0.0),
        }
    }

    /// Evaluates `g` on every terminal node, checking `g >= 0`.
    pub fn terminal_values(&self, model: &CostModel, lattice: &SupportLattice) -> Result<Vec<Position>> {
        self.validate(model)?;
        let t = lattice.horizon();
        if let Payoff::CustomTable { values } = self {
            if values.len() != lattice.nodes[t].len() {
                return Err(Error::InvalidPayoff(format!(
                    "payoff table has {} rows, terminal layer has {} nodes",
                    values.len(),
                    lattice.nodes[t].len()
                )));
            }
        }
        lattice.nodes[t]
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let g = self.payoff_vector(model, s, k)?;
                if let Some(v) = std::iter::once(g.cash).chain(g.risky.iter().copied()).find(|v| *v < 0.0) {
                    return Err(Error::NegativePayoff { node: k, value: v });
                }
                Ok(g)
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Payoff::Zero => true,
            Payoff::CustomTable { values } => values.iter().flatten().all(|v| *v == 0.0),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frictionless(p: f64) -> MarketState {
        MarketState::new(vec![p, p])
    }

    #[test]
    fn call_values() {
        let m = CostModel::proportional(1).unwrap();
        let c = Payoff::CashSettledCall { asset: 0, strike: 100.0 };
        assert_eq!(c.payoff_vector(&m, &frictionless(120.0), 0).unwrap(), Position::new(20.0, vec![0.0]));
        assert_eq!(c.payoff_vector(&m, &frictionless(80.0), 0).unwrap(), Position::new(0.0, vec![0.0]));
        let p = Payoff::CashSettledPut { asset: 0, strike: 100.0 };
        assert_eq!(p.payoff_vector(&m, &frictionless(80.0), 0).unwrap().cash, 20.0);
    }

    #[test]
    fn basket_value() {
        let m = CostModel::proportional(2).unwrap();
        let b = Payoff::Basket { weights: vec![0.5, 0.5], strike: 15.0 };
        let s = MarketState::new(vec![10.0, 10.0, 30.0, 30.0]);
        assert_eq!(b.payoff_vector(&m, &s, 0).unwrap(), Position::new(5.0, vec![0.0, 0.0]));
    }

    #[test]
    fn mid_price_for_spread_states() {
        let m = CostModel::proportional(1).unwrap();
        let c = Payoff::CashSettledCall { asset: 0, strike: 100.0 };
        let s = MarketState::new(vec![119.0, 121.0]);
        assert_eq!(c.payoff_vector(&m, &s, 0).unwrap().cash, 20.0);
    }

    #[test]
    fn physical_call_requires_prepaid_strike() {
        let m = CostModel::proportional(1).unwrap();
        let bad = Payoff::PhysicalCall { asset: 0, strike: 100.0, strike_prepaid: false };
        assert!(matches!(bad.validate(&m), Err(Error::InvalidPayoff(_))));
        let ok = Payoff::PhysicalCall { asset: 0, strike: 100.0, strike_prepaid: true };
        assert_eq!(ok.payoff_vector(&m, &frictionless(120.0), 0).unwrap().risky, vec![1.0]);
        assert_eq!(ok.payoff_vector(&m, &frictionless(90.0), 0).unwrap().risky, vec![0.0]);
    }

    #[test]
    fn custom_table_rejects_negative() {
        let m = CostModel::proportional(1).unwrap();
        let t = Payoff::CustomTable { values: vec![vec![1.0, 0.0], vec![0.0, -2.0]] };
        assert_eq!(t.payoff_vector(&m, &frictionless(1.0), 0).unwrap(), Position::new(1.0, vec![0.0]));
        assert!(matches!(
            t.payoff_vector(&m, &frictionless(1.0), 1),
            Err(Error::NegativePayoff { node: 1, .. })
        ));
        assert!(Payoff::CustomTable { values: vec![vec![0.0, 0.0]] }.is_zero());
    }
}
