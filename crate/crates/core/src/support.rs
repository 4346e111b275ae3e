//! Conditional supports and the finite scenario lattice.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::MarketState;

pub const DEFAULT_RECOMBINATION_TOL: f64 = 1e-9;
pub const DEFAULT_NODE_CAP: usize = 1_000_000;

/// One explicit transition of a [`SupportModel::Table`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub t: usize,
    pub parent: Vec<f64>,
    pub child: Vec<f64>,
}

/// Finite representation of the support of `S_{t+1}` given `S_t = s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupportModel {
    /// Successors `s * f` (coordinatewise) for each factor vector `f`.
    Multiplicative { factors: Vec<Vec<f64>> },
    /// Successors `s + a` for each increment vector `a`.
    Additive { increments: Vec<Vec<f64>> },
    /// Successors listed per `(t, parent)`; parents are matched within the
    /// recombination tolerance.
    Table { rows: Vec<TableRow>, tol: f64 },
}

/// `|a - b| <= tol * max(|a|, |b|)` on every coordinate.
pub fn states_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| x == y || (x - y).abs() <= tol * x.abs().max(y.abs()))
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl SupportModel {
    pub fn state_dim(&self) -> Option<usize> {
        match self {
            SupportModel::Multiplicative { factors: v } | SupportModel::Additive { increments: v } => {
                v.first().map(Vec::len)
            }
            SupportModel::Table { rows, .. } => rows.first().map(|r| r.parent.len()),
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        let vectors: Box<dyn Iterator<Item = &Vec<f64>>> = match self {
            SupportModel::Multiplicative { factors } => Box::new(factors.iter()),
            SupportModel::Additive { increments } => Box::new(increments.iter()),
            SupportModel::Table { rows, .. } => {
                Box::new(rows.iter().flat_map(|r| [&r.parent, &r.child]))
            }
        };
        let mut any = false;
        for v in vectors {
            any = true;
            if v.len() != m {
                return Err(Error::LayoutMismatch(format!(
                    "support vector has {} coordinates, market state has {m}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config("support vectors must be finite".into()));
            }
        }
        if !any {
            return Err(Error::EmptySupport { t: 0, detail: "support model lists no successors".into() });
        }
        if let SupportModel::Multiplicative { factors } = self {
            if factors.iter().flatten().any(|f| *f <= 0.0) {
                return Err(Error::Config("multiplicative factors must be > 0".into()));
            }
        }
        Ok(())
    }

    /// The successor states of `s` at time `t`, first occurrence kept.
    pub fn successors(&self, t: usize, s: &MarketState) -> Result<Vec<MarketState>> {
        let s = s.coords();
        let raw: Vec<Vec<f64>> = match self {
            SupportModel::Multiplicative { factors } => factors
                .iter()
                .map(|f| s.iter().zip(f).map(|(x, g)| x * g).collect())
                .collect(),
            SupportModel::Additive { increments } => increments
                .iter()
                .map(|a| s.iter().zip(a).map(|(x, b)| x + b).collect())
                .collect(),
            SupportModel::Table { rows, tol } => rows
                .iter()
                .filter(|r| r.t == t && states_close(&r.parent, s, *tol))
                .map(|r| r.child.clone())
                .collect(),
        };
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(raw.len());
        for c in raw {
            if c.len() != s.len() {
                return Err(Error::LayoutMismatch(format!(
                    "successor has {} coordinates, state has {}",
                    c.len(),
                    s.len()
                )));
            }
            if !out.iter().any(|o| o == &c) {
                out.push(c);
            }
        }
        if out.is_empty() {
            return Err(Error::EmptySupport { t, detail: format!("no successor listed for state {s:?}") });
        }
        Ok(out.into_iter().map(MarketState).collect())
    }

    /// `R_t(s)`: an upper bound on the norm of every successor of `s`.
    pub fn radius(&self, t: usize, s: &MarketState) -> Result<f64> {
        Ok(self
            .successors(t, s)?
            .iter()
            .map(|x| norm(x.coords()))
            .fold(0.0, f64::max))
    }
}

/// Scenario lattice: recombined node lists per time and successor indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportLattice {
    /// `nodes[t]` is sorted lexicographically.
    pub nodes: Vec<Vec<MarketState>>,
    /// `children[t][i]` lists indices into `nodes[t + 1]`, for `t < T`.
    pub children: Vec<Vec<Vec<usize>>>,
}

impl SupportLattice {
    pub fn horizon(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        self.nodes.iter().map(Vec::len).collect()
    }

    pub fn state(&self, t: usize, node: usize) -> &MarketState {
        &self.nodes[t][node]
    }

    /// Number of root-to-leaf paths, saturating.
    pub fn path_count(&self) -> u128 {
        let mut counts = vec![1u128; self.nodes[self.horizon()].len()];
        for t in (0..self.horizon()).rev() {
            counts = self.children[t]
                .iter()
                .map(|ch| ch.iter().fold(0u128, |a, &c| a.saturating_add(counts[c])))
                .collect();
        }
        counts[0]
    }
}

/// Builds the lattice rooted at `s0` over `horizon` steps.
pub fn build_lattice(
    model: &SupportModel,
    s0: &MarketState,
    horizon: usize,
    tol: f64,
    cap: usize,
) -> Result<SupportLattice> {
    if horizon < 1 {
        return Err(Error::Config("horizon must be >= 1".into()));
    }
    model.validate(s0.dim())?;
    let mut nodes = vec![vec![s0.clone()]];
    let mut children = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let succ: Vec<Vec<MarketState>> = nodes[t]
            .iter()
            .map(|s| model.successors(t, s))
            .collect::<Result<_>>()?;
        let mut raw: Vec<&MarketState> = succ.iter().flatten().collect();
        raw.sort_by(|a, b| lex_cmp(a.coords(), b.coords()));

        let mut reps: Vec<MarketState> = Vec::new();
        for c in raw {
            if find_rep(&reps, c.coords(), tol).is_none() {
                reps.push(c.clone());
                if reps.len() > cap {
                    return Err(Error::Explosion { t: t + 1, nodes: reps.len(), cap });
                }
            }
        }
        let layer_children = succ
            .iter()
            .map(|list| {
                let mut idx: Vec<usize> = Vec::with_capacity(list.len());
                for c in list {
                    let r = find_rep(&reps, c.coords(), tol).expect("every successor has a representative");
                    if !idx.contains(&r) {
                        idx.push(r);
                    }
                }
                idx
            })
            .collect();
        children.push(layer_children);
        nodes.push(reps);
    }
    Ok(SupportLattice { nodes, children })
}

/// Finds a representative close to `x` among `reps`, which are sorted
/// lexicographically; only those whose first coordinate is near `x[0]` are
/// inspected.
fn find_rep(reps: &[MarketState], x: &[f64], tol: f64) -> Option<usize> {
    if x.is_empty() {
        return if reps.is_empty() { None } else { Some(0) };
    }
    let lo_bound = x[0] - tol * x[0].abs() * 2.0;
    let start = reps.partition_point(|r| r.coords()[0] < lo_bound);
    let hi_bound = x[0] + tol * x[0].abs() * 2.0;
    (start..reps.len())
        .take_while(|&i| reps[i].coords()[0] <= hi_bound)
        .find(|&i| states_close(reps[i].coords(), x, tol))
}
