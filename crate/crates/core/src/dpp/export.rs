//! CSV exports of value surfaces, rollout paths and convergence tables.

use std::io::Write;

use super::{HedgingProblem, RolloutReport, SolveOutput};
use crate::error::Result;

fn fmt(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

/// `t, node_id, s_0.., v_0.., gamma, theta, y_0..`; `theta` and `y` are
/// empty at the terminal layer.
pub fn write_layers<W: Write>(problem: &HedgingProblem, out: &SolveOutput, w: W) -> Result<()> {
    let lattice = problem.lattice();
    let grid = problem.grid();
    let m = lattice.nodes[0][0].dim();
    let n = grid.dim();
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string(), "node_id".to_string()];
    header.extend((0..m).map(|i| format!("s{i}")));
    header.extend((0..n).map(|i| format!("v{i}")));
    header.extend(["gamma".to_string(), "theta".to_string()]);
    header.extend((0..n).map(|i| format!("y{i}")));
    wr.write_record(&header)?;
    for layer in &out.layers {
        let t = layer.t;
        for node in 0..layer.nodes {
            let s = lattice.nodes[t][node].coords();
            for cell in 0..layer.cells {
                let mut rec = vec![t.to_string(), node.to_string()];
                rec.extend(s.iter().map(|x| fmt(*x)));
                rec.extend(grid.coords(cell).into_iter().map(fmt));
                rec.push(fmt(layer.gamma_at(node, cell)));
                match layer.node_theta(node) {
                    Some(th) => rec.push(fmt(th[cell])),
                    None => rec.push(String::new()),
                }
                let y = if t < out.policy.argmin.len() { out.policy.action(t, node, cell) } else { None };
                match y {
                    Some(y) => rec.extend(grid.coords(y).into_iter().map(fmt)),
                    None => rec.extend(std::iter::repeat_n(String::new(), n)),
                }
                wr.write_record(&rec)?;
            }
        }
    }
    wr.flush()?;
    Ok(())
}

/// `path_id, nodes, trades, terminal_cash, shortfall`; node ids are joined by
/// `-`, per-step trades by `|` and coordinates within a trade by `;`.
pub fn write_rollout<W: Write>(report: &RolloutReport, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["path_id", "nodes", "trades", "terminal_cash", "shortfall"])?;
    for p in &report.paths {
        let nodes: Vec<String> = p.nodes.iter().map(|n| n.to_string()).collect();
        let trades: Vec<String> = p
            .trades
            .iter()
            .map(|tr| tr.iter().map(|x| fmt(*x)).collect::<Vec<_>>().join(";"))
            .collect();
        wr.write_record([
            p.path_id.to_string(),
            nodes.join("-"),
            trades.join("|"),
            fmt(p.terminal_cash),
            fmt(p.shortfall),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// `step, price, delta_from_finest`, one row per refinement level.
pub fn write_convergence<W: Write>(rows: &[(Vec<f64>, f64)], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["step", "price", "delta_from_finest"])?;
    let finest = rows.last().map_or(0.0, |r| r.1);
    for (steps, price) in rows {
        let s: Vec<String> = steps.iter().map(|x| fmt(*x)).collect();
        wr.write_record([s.join(";"), fmt(*price), fmt(price - finest)])?;
    }
    wr.flush()?;
    Ok(())
}
