//! Minimal super-hedging costs of European claims in discrete-time markets
//! with general transaction costs.
//!
//! A [`market::CostModel`] prices bundles of assets (order book, proportional
//! or fixed-cost), a [`support::SupportModel`] generates the scenario lattice,
//! and [`dpp::HedgingProblem`] runs the backward recursion over a grid of
//! risky positions. [`arbitrage`] reports the no-arbitrage conditions that
//! make the recursion well posed and [`oracle`] holds brute-force references.
//!
//! ```
//! use superhedge::dpp::{HedgingProblem, PositionGrid, SolverConfig};
//! use superhedge::market::{CostModel, MarketState};
//! use superhedge::payoff::Payoff;
//! use superhedge::support::SupportModel;
//!
//! let problem = HedgingProblem::new(
//!     CostModel::proportional(1)?,
//!     SupportModel::Multiplicative { factors: vec![vec![0.8, 0.8], vec![1.2, 1.2]] },
//!     MarketState::new(vec![100.0, 100.0]),
//!     1,
//!     PositionGrid::uniform(1, -2.0, 2.0, 0.25)?,
//!     SolverConfig::default(),
//! )?;
//! let out = problem.solve(&Payoff::CashSettledCall { asset: 0, strike: 100.0 })?;
//! assert_eq!(out.price, 10.0);
//! # Ok::<(), superhedge::Error>(())
//! ```

// negated float comparisons below are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arbitrage;
pub mod cli;
pub mod config;
pub mod dpp;
pub mod error;
pub mod market;
pub mod oracle;
pub mod payoff;
pub mod sphere;
pub mod support;

pub use error::{Error, Result};
