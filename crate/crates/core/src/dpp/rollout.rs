//! Pathwise simulation of a solved hedge policy.

use serde::Serialize;

use super::layer::terminal_value;
use super::{HedgingProblem, SolveOutput};
use crate::error::{Error, Result};
use crate::market::CostFunction;

const MAX_PATHS: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathReport {
    pub path_id: usize,
    /// Lattice node index at each time.
    pub nodes: Vec<usize>,
    /// Risky trade executed at each `t < T`.
    pub trades: Vec<Vec<f64>>,
    /// Cash held after the last rebalance.
    pub terminal_cash: f64,
    /// `L_T(V_T - xi)`; negative means under-replication.
    pub shortfall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RolloutReport {
    pub initial_cash: f64,
    pub worst_shortfall: f64,
    /// Steps where the policy had no finite action and the position was held.
    pub held_steps: usize,
    pub paths: Vec<PathReport>,
}

/// Follows the policy along every root-to-leaf path, paying each rebalance
/// at `C_t`, and measures `L_T(V_T - xi) = cash - g^1 - C_T(g^(2) - v)`.
pub fn rollout(problem: &HedgingProblem, out: &SolveOutput, initial_cash: f64) -> Result<RolloutReport> {
    let lattice = problem.lattice();
    let count = lattice.path_count();
    if count > MAX_PATHS {
        return Err(Error::TooLarge(format!("{count} paths exceed the rollout cap of {MAX_PATHS}")));
    }
    let cost: &dyn CostFunction = problem.market();
    let grid = problem.grid();
    let big_t = lattice.horizon();
    let mut paths = Vec::with_capacity(count as usize);
    let mut held_steps = 0;

    // explicit stack of (t, node, cell, cash, nodes so far, trades so far)
    let mut stack = vec![(0usize, 0usize, grid.zero_index(), initial_cash, vec![0usize], Vec::<Vec<f64>>::new())];
    while let Some((t, node, cell, cash, nodes, trades)) = stack.pop() {
        let s = lattice.nodes[t][node].coords();
        if t == big_t {
            let shortfall = cash - terminal_value(cost, t, s, &out.terminal[node], grid, cell);
            paths.push(PathReport { path_id: 0, nodes, trades, terminal_cash: cash, shortfall });
            continue;
        }
        let y = match out.policy.action(t, node, cell) {
            Some(y) => y,
            None => {
                held_steps += 1;
                cell
            }
        };
        let trade = grid.trade(y, cell);
        let cash = cash - cost.risky_cost(t, s, &trade);
        // push in reverse so paths come out in child order
        for &c in lattice.children[t][node].iter().rev() {
            let mut n = nodes.clone();
            n.push(c);
            let mut tr = trades.clone();
            tr.push(trade.clone());
            stack.push((t + 1, c, y, cash, n, tr));
        }
    }
    for (i, p) in paths.iter_mut().enumerate() {
        p.path_id = i;
    }
    let worst = paths.iter().map(|p| p.shortfall).fold(f64::INFINITY, f64::min);
    Ok(RolloutReport { initial_cash, worst_shortfall: worst, held_steps, paths })
}
