//! Slow reference computations used to validate the solver.

use rayon::prelude::*;

use crate::dpp::layer::terminal_value;
use crate::dpp::{rollout, HedgingProblem, SolveOutput};
use crate::error::{Error, Result};
use crate::market::CostFunction;
use crate::payoff::Payoff;

/// Upper bound on `(grid points)^(decision nodes)`.
pub const MAX_STRATEGIES: u128 = 10_000_000;

struct TreeNode {
    t: usize,
    lattice_node: usize,
    parent: Option<usize>,
    children: Vec<usize>,
}

/// The scenario lattice unrolled into a tree: one node per history.
fn unroll(problem: &HedgingProblem) -> Vec<TreeNode> {
    let lattice = problem.lattice();
    let big_t = lattice.horizon();
    let mut tree = vec![TreeNode { t: 0, lattice_node: 0, parent: None, children: Vec::new() }];
    let mut i = 0;
    while i < tree.len() {
        let (t, ln) = (tree[i].t, tree[i].lattice_node);
        if t < big_t {
            for &c in &lattice.children[t][ln] {
                let id = tree.len();
                tree.push(TreeNode { t: t + 1, lattice_node: c, parent: Some(i), children: Vec::new() });
                tree[i].children.push(id);
            }
        }
        i += 1;
    }
    tree
}

/// Minimal cost over every grid-valued strategy (one position per history),
/// of the worst case over paths of the accumulated trading costs plus the
/// terminal payoff adjustment. Search runs over the whole grid.
pub fn enumerate_price(problem: &HedgingProblem, payoff: &Payoff) -> Result<f64> {
    let tree = unroll(problem);
    let big_t = problem.horizon();
    let decisions: Vec<usize> = (0..tree.len()).filter(|&i| tree[i].t < big_t).collect();
    let grid = problem.grid();
    let cells = grid.len();
    let total = (cells as u128).checked_pow(decisions.len() as u32).unwrap_or(u128::MAX);
    if total > MAX_STRATEGIES {
        return Err(Error::TooLarge(format!(
            "{cells}^{} strategies exceed the cap of {MAX_STRATEGIES}",
            decisions.len()
        )));
    }
    let lattice = problem.lattice();
    let cost: &dyn CostFunction = problem.market();
    let terminal = payoff.terminal_values(problem.market(), lattice)?;
    let term: Vec<Vec<f64>> = lattice.nodes[big_t]
        .iter()
        .enumerate()
        .map(|(n, s)| (0..cells).map(|c| terminal_value(cost, big_t, s.coords(), &terminal[n], grid, c)).collect())
        .collect();
    // trade costs per decision node, indexed [y * cells + v]; large grids
    // are only reachable with a single decision node and are priced inline
    let tabulate = cells <= 2048;
    let trade_cost: Vec<Vec<f64>> = decisions
        .iter()
        .filter(|_| tabulate)
        .map(|&d| {
            let s = lattice.nodes[tree[d].t][tree[d].lattice_node].coords();
            let t = tree[d].t;
            (0..cells * cells)
                .into_par_iter()
                .map(|i| cost.risky_cost(t, s, &grid.trade(i / cells, i % cells)))
                .collect()
        })
        .collect();
    let slot: Vec<usize> = {
        let mut s = vec![usize::MAX; tree.len()];
        for (k, &d) in decisions.iter().enumerate() {
            s[d] = k;
        }
        s
    };
    let zero = grid.zero_index();
    let total = total as u64;
    let chunk = 4096u64;
    let best = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut y = vec![0usize; decisions.len()];
            let mut value = vec![0.0f64; tree.len()];
            let mut best = f64::INFINITY;
            for a in c * chunk..((c + 1) * chunk).min(total) {
                let mut rest = a;
                for yk in y.iter_mut() {
                    *yk = (rest % cells as u64) as usize;
                    rest /= cells as u64;
                }
                // children always follow their parent in `tree`
                for i in (0..tree.len()).rev() {
                    let node = &tree[i];
                    let v = match node.parent {
                        Some(p) => y[slot[p]],
                        None => zero,
                    };
                    value[i] = if node.t == big_t {
                        term[node.lattice_node][v]
                    } else {
                        let k = slot[i];
                        let worst = node.children.iter().map(|&ch| value[ch]).fold(f64::NEG_INFINITY, f64::max);
                        let c = if tabulate {
                            trade_cost[k][y[k] * cells + v]
                        } else {
                            let s = lattice.nodes[node.t][node.lattice_node].coords();
                            cost.risky_cost(node.t, s, &grid.trade(y[k], v))
                        };
                        c + worst
                    };
                }
                best = best.min(value[0]);
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(best)
}

/// Replication price of a call on a recombining binomial tree with
/// per-step factors `up` and `down`.
pub fn binomial_frictionless_price(s0: f64, up: f64, down: f64, strike: f64, steps: usize) -> Result<f64> {
    if !(s0 > 0.0 && down > 0.0 && down < 1.0 && 1.0 < up) {
        return Err(Error::ArbitrageParams(format!(
            "need 0 < down < 1 < up, got down={down}, up={up}"
        )));
    }
    let q = (1.0 - down) / (up - down);
    let mut values: Vec<f64> = (0..=steps)
        .map(|j| (s0 * up.powi(j as i32) * down.powi((steps - j) as i32) - strike).max(0.0))
        .collect();
    for n in (0..steps).rev() {
        values = (0..=n).map(|j| q * values[j + 1] + (1.0 - q) * values[j]).collect();
    }
    Ok(values[0])
}

/// Worst `L_T(V_T - xi)` over paths when following the policy from
/// `price + slack`.
pub fn verify_superhedge(problem: &HedgingProblem, out: &SolveOutput, slack: f64) -> Result<f64> {
    Ok(rollout(problem, out, out.price + slack)?.worst_shortfall)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpp::{PositionGrid, SolverConfig};
    use crate::market::{CostModel, MarketState};
    use crate::support::SupportModel;

    fn problem(horizon: usize, step: f64) -> HedgingProblem {
        HedgingProblem::new(
            CostModel::proportional(1).unwrap(),
            SupportModel::Multiplicative { factors: vec![vec![0.8, 0.8], vec![1.2, 1.2]] },
            MarketState::new(vec![100.0, 100.0]),
            horizon,
            PositionGrid::uniform(1, -1.0, 1.0, step).unwrap(),
            SolverConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn binomial_closed_form() {
        assert!((binomial_frictionless_price(100.0, 1.2, 0.8, 100.0, 1).unwrap() - 10.0).abs() < 1e-12);
        assert!((binomial_frictionless_price(100.0, 1.2, 0.8, 100.0, 2).unwrap() - 11.0).abs() < 1e-12);
        assert!((binomial_frictionless_price(100.0, 1.2, 0.8, 0.0, 3).unwrap() - 100.0).abs() < 1e-9);
        assert!(matches!(
            binomial_frictionless_price(100.0, 1.2, 1.1, 100.0, 1),
            Err(Error::ArbitrageParams(_))
        ));
    }

    #[test]
    fn enumeration_matches_hand_values() {
        let p = problem(1, 0.25);
        let call = Payoff::CashSettledCall { asset: 0, strike: 100.0 };
        assert_eq!(enumerate_price(&p, &call).unwrap(), 10.0);
        assert_eq!(enumerate_price(&p, &Payoff::Zero).unwrap(), 0.0);
        assert_eq!(p.solve(&call).unwrap().price, 10.0);
    }

    #[test]
    fn enumeration_two_steps_matches_solver() {
        let p = problem(2, 0.25);
        let call = Payoff::CashSettledCall { asset: 0, strike: 100.0 };
        assert_eq!(enumerate_price(&p, &call).unwrap(), p.solve(&call).unwrap().price);
    }

    #[test]
    fn too_large_is_rejected() {
        let p = problem(3, 0.05);
        assert!(matches!(enumerate_price(&p, &Payoff::Zero), Err(Error::TooLarge(_))));
    }

    #[test]
    fn exact_replication_has_no_shortfall() {
        let p = problem(1, 0.25);
        let out = p.solve(&Payoff::CashSettledCall { asset: 0, strike: 100.0 }).unwrap();
        assert_eq!(verify_superhedge(&p, &out, 0.0).unwrap(), 0.0);
    }
}
