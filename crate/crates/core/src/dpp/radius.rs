//! Compact search domain for the inf step.
//!
//! For a cost with a super homogeneity law `delta`, the one-step zero-claim
//! functional `D^0(s, 0, z) = C_t(s, (0, z)) + theta^0_t(s, z)` grows at least
//! like `delta(|z|) * i_t(s)` with `i_t` its infimum over the unit sphere.
//! Combined with `|C_t(y - v) - C_t(y)| <= h_t(v)`, any `y` outside the ball
//! of radius `delta^{-1}(lambda / i_t) + 1` costs more than holding `y = 0`.

use serde::Serialize;

use super::grid::PositionGrid;
use crate::error::{Error, Result};
use crate::market::{CostFunction, DeltaLaw};
use crate::support::SupportLattice;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusBound {
    pub t: usize,
    pub cells: usize,
    /// Sphere infimum `i_t` per node.
    pub infimum: Vec<f64>,
    /// Search radius per node and grid cell (node-major).
    pub radius: Vec<f64>,
    /// Nodes where `i_t <= eps` forced the fallback radius.
    pub fallback: Vec<bool>,
}

impl RadiusBound {
    pub fn node_radius(&self, node: usize) -> &[f64] {
        &self.radius[node * self.cells..(node + 1) * self.cells]
    }

    /// A bound with the same radius everywhere.
    pub fn uniform(t: usize, nodes: usize, cells: usize, r: f64) -> Self {
        RadiusBound {
            t,
            cells,
            infimum: vec![f64::NAN; nodes],
            radius: vec![r; nodes * cells],
            fallback: vec![false; nodes],
        }
    }
}

/// `D^0(s, 0, z)` for a unit direction `z`, using `theta0` interpolated on the
/// grid. Directions leaving the grid box are scaled back inside and bounded
/// below through `D(z) >= delta(1/rho) D(rho z)`. `None` when no positive
/// scaling fits in the box.
pub fn zero_functional(
    cost: &dyn CostFunction,
    t: usize,
    s: &[f64],
    theta0: &[f64],
    grid: &PositionGrid,
    z: &[f64],
    delta: &DeltaLaw,
) -> Option<f64> {
    if grid.contains(z) {
        return Some(cost.risky_cost(t, s, z) + grid.interpolate(theta0, z));
    }
    let rho = z
        .iter()
        .zip(&grid.axes)
        .filter(|(x, _)| **x != 0.0)
        .map(|(x, a)| if *x > 0.0 { a.max / x } else { a.min / x })
        .fold(1.0f64, f64::min);
    if !(rho > 0.0) {
        return None;
    }
    let zr: Vec<f64> = z
        .iter()
        .zip(&grid.axes)
        .map(|(x, a)| (x * rho).clamp(a.min, a.max))
        .collect();
    let d = cost.risky_cost(t, s, &zr) + grid.interpolate(theta0, &zr);
    Some(delta.apply(1.0 / rho) * d)
}

/// `i_t(s)`: minimum of [`zero_functional`] over the sphere sample. Unknown
/// directions count as 0.
pub fn sphere_infimum(
    cost: &dyn CostFunction,
    t: usize,
    s: &[f64],
    theta0: &[f64],
    grid: &PositionGrid,
    sphere: &[Vec<f64>],
    delta: &DeltaLaw,
) -> f64 {
    sphere
        .iter()
        .map(|z| zero_functional(cost, t, s, theta0, grid, z, delta).unwrap_or(0.0))
        .fold(f64::INFINITY, f64::min)
}

/// Radii from the per-node infima `i_t` of a zero-claim solve.
///
/// `lambda = |D^xi(s, v, 0)| + h_t(s, (0, v))` and the radius is
/// `delta^{-1}(lambda / i_t) + 1`; nodes with `i_t <= eps` get `fallback`, or
/// fail when it is `None`.
#[allow(clippy::too_many_arguments)]
pub fn compute_radius(
    cost: &dyn CostFunction,
    lattice: &SupportLattice,
    grid: &PositionGrid,
    t: usize,
    theta: &[f64],
    infimum: Vec<f64>,
    delta: &DeltaLaw,
    eps: f64,
    fallback: Option<f64>,
) -> Result<RadiusBound> {
    let cells = grid.len();
    let nodes = lattice.nodes[t].len();
    let zero = grid.zero_index();
    let mut radius = Vec::with_capacity(nodes * cells);
    let mut used = vec![false; nodes];
    for node in 0..nodes {
        let i = infimum[node];
        if !(i > eps) {
            match fallback {
                Some(r) => {
                    used[node] = true;
                    radius.extend(std::iter::repeat_n(r, cells));
                    continue;
                }
                None => return Err(Error::RadiusDegenerate { t, node, infimum: i }),
            }
        }
        let s = lattice.nodes[t][node].coords();
        let theta_zero = theta[node * cells + zero];
        for v in 0..cells {
            let d = cost.risky_cost(t, s, &grid.trade(zero, v)) + theta_zero;
            let lambda = d.abs() + cost.bound(t, s, &grid.coords(v));
            let r = if lambda.is_finite() { delta.inverse(lambda / i) + 1.0 } else { f64::INFINITY };
            radius.push(r);
        }
    }
    Ok(RadiusBound { t, cells, infimum, radius, fallback: used })
}
