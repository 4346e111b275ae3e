//! No-arbitrage diagnostics computed from zero-claim solves: AIP, SAIP, the
//! horizon-market SAIP and LAIP with a per-node null-space estimate.

use serde::Serialize;

use crate::dpp::radius::zero_functional;
use crate::dpp::{HedgingProblem, SolveOutput};
use crate::error::{Error, Result};
use crate::market::{CostFunction, DeltaLaw};

const NULL_SPACE_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AipCheck {
    pub aip: bool,
    /// `max_node |gamma^0_t(node, 0)|`.
    pub residual: f64,
    /// Some node's zero-position minimizer sits on the grid boundary with a
    /// negative value: the true infimum is likely `-inf`.
    pub boundary_hit: bool,
}

/// AIP at time `t`: the zero claim costs 0 at every node.
pub fn check_aip(problem: &HedgingProblem, zero: &SolveOutput, t: usize, tol: f64) -> AipCheck {
    let grid = problem.grid();
    let z = grid.zero_index();
    let layer = &zero.layers[t];
    let mut residual = 0.0f64;
    let mut boundary_hit = false;
    for node in 0..layer.nodes {
        let g = layer.gamma_at(node, z);
        residual = residual.max(g.abs());
        if t < zero.policy.argmin.len() && g < -tol {
            if let Some(y) = zero.policy.action(t, node, z) {
                boundary_hit |= grid.on_boundary(y);
            }
        }
    }
    AipCheck { aip: residual <= tol, residual, boundary_hit }
}

/// SAIP at time `t`: AIP and `i_t > tol` at every node. Returns the smallest
/// sphere infimum over nodes.
pub fn check_saip(problem: &HedgingProblem, zero: &SolveOutput, t: usize, tol_aip: f64, tol_saip: f64) -> (bool, f64) {
    let aip = check_aip(problem, zero, t, tol_aip).aip;
    let i = zero.radii[t].infimum.iter().copied().fold(f64::INFINITY, f64::min);
    (aip && i > tol_saip, i)
}

/// SAIP of the enlarged conic market; takes the horizon zero-claim solve.
pub fn check_saip_horizon(
    problem: &HedgingProblem,
    horizon_zero: &SolveOutput,
    t: usize,
    tol_aip: f64,
    tol_saip: f64,
) -> (bool, f64) {
    check_saip(problem, horizon_zero, t, tol_aip, tol_saip)
}

/// Zero-cost directions at one node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullSpaceEstimate {
    pub node: usize,
    /// Orthonormal basis of the span of the zero-cost directions.
    pub basis: Vec<Vec<f64>>,
    /// Every sampled `z` with `D^0(0, z) <= tol` also has `D^0(0, -z) <= tol`.
    pub symmetric: bool,
}

pub(crate) fn node_null_space(
    problem: &HedgingProblem,
    cost: &dyn CostFunction,
    zero: &SolveOutput,
    delta: &DeltaLaw,
    t: usize,
    node: usize,
) -> NullSpaceEstimate {
    let tol = problem.config().tol_aip;
    let grid = problem.grid();
    let s = problem.lattice().nodes[t][node].coords();
    let theta = zero.layers[t].node_theta(node).expect("inner layers carry theta");
    let d = |z: &[f64]| zero_functional(cost, t, s, theta, grid, z, delta);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut symmetric = true;
    for z in problem.sphere() {
        let Some(dz) = d(z) else { continue };
        if dz > tol {
            continue;
        }
        let neg: Vec<f64> = z.iter().map(|x| -x).collect();
        match d(&neg) {
            Some(dn) if dn <= tol => {}
            Some(_) => {
                symmetric = false;
                continue;
            }
            None => continue,
        }
        let mut r = z.clone();
        for b in &basis {
            let p: f64 = b.iter().zip(&r).map(|(u, v)| u * v).sum();
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= p * bi;
            }
        }
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > NULL_SPACE_RANK_TOL {
            basis.push(r.iter().map(|x| x / norm).collect());
        }
    }
    NullSpaceEstimate { node, basis, symmetric }
}

/// Per-node null spaces at `t` and whether LAIP holds there.
pub fn estimate_null_space(problem: &HedgingProblem, zero: &SolveOutput, t: usize) -> Result<(Vec<NullSpaceEstimate>, bool)> {
    let flags = problem.market().flags();
    if !flags.sub_additive {
        return Err(Error::NotApplicable(format!(
            "{} costs are not sub-additive",
            problem.market().kind_name()
        )));
    }
    let delta = flags.delta.unwrap_or(DeltaLaw::Identity);
    let nodes = problem.lattice().nodes[t].len();
    let est: Vec<NullSpaceEstimate> = (0..nodes)
        .map(|n| node_null_space(problem, problem.market(), zero, &delta, t, n))
        .collect();
    let aip = check_aip(problem, zero, t, problem.config().tol_aip).aip;
    let laip = aip && est.iter().all(|e| e.symmetric);
    Ok((est, laip))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeReport {
    pub t: usize,
    pub aip: bool,
    pub aip_residual: f64,
    pub boundary_hit: bool,
    /// `None` when the cost has no super homogeneity law.
    pub saip: Option<bool>,
    pub infimum: Option<f64>,
    pub horizon_saip: Option<bool>,
    pub horizon_infimum: Option<f64>,
    /// `None` when the cost is not sub-additive.
    pub laip: Option<bool>,
    /// Nodes with a nontrivial null space.
    pub null_space: Vec<NullSpaceEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArbitrageReport {
    pub times: Vec<TimeReport>,
    pub tol_aip: f64,
    pub tol_saip: f64,
}

impl ArbitrageReport {
    pub fn aip(&self) -> bool {
        self.times.iter().all(|t| t.aip)
    }

    pub fn saip(&self) -> Option<bool> {
        self.times.iter().map(|t| t.saip).collect::<Option<Vec<_>>>().map(|v| v.iter().all(|x| *x))
    }
}

/// Runs every applicable check for `t = 0..T-1`.
pub fn check_arbitrage(problem: &HedgingProblem) -> Result<ArbitrageReport> {
    let cfg = problem.config();
    let zero = problem.zero_solve()?;
    let flags = problem.market().flags();
    let horizon = match problem.market().horizon_market() {
        Some(_) => Some(problem.horizon_zero_solve()?),
        None => None,
    };
    let mut times = Vec::new();
    for t in 0..problem.horizon() {
        let a = check_aip(problem, &zero, t, cfg.tol_aip);
        let (saip, infimum) = if flags.delta.is_some() {
            let (s, i) = check_saip(problem, &zero, t, cfg.tol_aip, cfg.tol_saip);
            (Some(s), Some(i))
        } else {
            (None, None)
        };
        let (horizon_saip, horizon_infimum) = match &horizon {
            Some(h) => {
                let (s, i) = check_saip_horizon(problem, h, t, cfg.tol_aip, cfg.tol_saip);
                (Some(s), Some(i))
            }
            None => (None, None),
        };
        let (laip, null_space) = match estimate_null_space(problem, &zero, t) {
            Ok((est, laip)) => (Some(laip), est.into_iter().filter(|e| !e.basis.is_empty()).collect()),
            Err(Error::NotApplicable(_)) => (None, Vec::new()),
            Err(e) => return Err(e),
        };
        times.push(TimeReport {
            t,
            aip: a.aip,
            aip_residual: a.residual,
            boundary_hit: a.boundary_hit,
            saip,
            infimum,
            horizon_saip,
            horizon_infimum,
            laip,
            null_space,
        });
    }
    Ok(ArbitrageReport { times, tol_aip: cfg.tol_aip, tol_saip: cfg.tol_saip })
}
