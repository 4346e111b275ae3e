//! Terminal layer, conditional-sup step and pointwise-inf step.

use rayon::prelude::*;
use serde::Serialize;

use super::grid::PositionGrid;
use super::radius::RadiusBound;
use crate::market::{CostFunction, Position};
use crate::support::SupportLattice;

/// Sentinel for "no candidate achieved a finite value".
pub const NO_ARGMIN: u32 = u32::MAX;

/// Tabulated `gamma_t` (and optionally `theta_t`) over nodes times grid cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueLayer {
    pub t: usize,
    pub nodes: usize,
    pub cells: usize,
    /// Node-major: `gamma[node * cells + cell]`.
    pub gamma: Vec<f64>,
    pub theta: Option<Vec<f64>>,
    /// Every cost from `t` on is convex, so the layer should be too.
    pub convex: bool,
}

impl ValueLayer {
    pub fn gamma_at(&self, node: usize, cell: usize) -> f64 {
        self.gamma[node * self.cells + cell]
    }

    pub fn node_gamma(&self, node: usize) -> &[f64] {
        &self.gamma[node * self.cells..(node + 1) * self.cells]
    }

    pub fn node_theta(&self, node: usize) -> Option<&[f64]> {
        self.theta.as_ref().map(|th| &th[node * self.cells..(node + 1) * self.cells])
    }

    /// Largest `f(x) - (f(x - h) + f(x + h)) / 2` over nodes, interior cells
    /// and axes, where `h` is one grid step; 0 when every slice is convex.
    /// Triples touching an infinite value are skipped.
    pub fn midpoint_violation(&self, grid: &PositionGrid) -> f64 {
        let mut worst = 0.0f64;
        for node in 0..self.nodes {
            let g = self.node_gamma(node);
            for cell in 0..self.cells {
                let multi = grid.multi(cell);
                for (a, axis) in grid.axes.iter().enumerate() {
                    if multi[a] == 0 || multi[a] + 1 >= axis.len {
                        continue;
                    }
                    let stride = grid.strides()[a];
                    let (lo, mid, hi) = (g[cell - stride], g[cell], g[cell + stride]);
                    if lo.is_finite() && mid.is_finite() && hi.is_finite() {
                        worst = worst.max(mid - 0.5 * (lo + hi));
                    }
                }
            }
        }
        worst
    }
}

/// `g^1 + C_T(s, (0, g^(2) - v))` at a terminal node and grid cell.
pub fn terminal_value(cost: &dyn CostFunction, t: usize, s: &[f64], g: &Position, grid: &PositionGrid, cell: usize) -> f64 {
    let m = grid.multi(cell);
    let y: Vec<f64> = g
        .risky
        .iter()
        .zip(&grid.axes)
        .zip(&m)
        .map(|((gi, ax), k)| gi - ax.coord(*k))
        .collect();
    g.cash + cost.risky_cost(t, s, &y)
}

pub fn terminal_layer(
    cost: &dyn CostFunction,
    lattice: &SupportLattice,
    grid: &PositionGrid,
    payoffs: &[Position],
    convex: bool,
) -> ValueLayer {
    let t = lattice.horizon();
    let cells = grid.len();
    let nodes = lattice.nodes[t].len();
    let mut gamma = vec![0.0; nodes * cells];
    gamma.par_iter_mut().enumerate().for_each(|(i, out)| {
        let (node, cell) = (i / cells, i % cells);
        *out = terminal_value(cost, t, lattice.nodes[t][node].coords(), &payoffs[node], grid, cell);
    });
    ValueLayer { t, nodes, cells, gamma, theta: None, convex }
}

/// `theta_t(node, v) = max over successors of gamma_{t+1}(succ, v)`.
pub fn sup_step(next: &ValueLayer, lattice: &SupportLattice, t: usize) -> Vec<f64> {
    let cells = next.cells;
    let children = &lattice.children[t];
    let mut theta = vec![f64::NEG_INFINITY; children.len() * cells];
    theta.par_iter_mut().enumerate().for_each(|(i, out)| {
        let (node, cell) = (i / cells, i % cells);
        *out = children[node]
            .iter()
            .map(|&c| next.gamma_at(c, cell))
            .fold(f64::NEG_INFINITY, f64::max);
    });
    theta
}

/// Grid points sorted by (norm, lexicographic index), so a strict `<` scan
/// breaks ties towards the smallest then lexicographically first position,
/// and every ball around 0 is a prefix.
#[derive(Debug, Clone)]
pub struct Candidates {
    pub order: Vec<u32>,
    pub norms: Vec<f64>,
    /// `sum_a k_a * offset_stride_a` for each entry of `order`.
    keys: Vec<isize>,
    offset_strides: Vec<usize>,
    offset_len: usize,
    center: isize,
}

impl Candidates {
    pub fn new(grid: &PositionGrid) -> Self {
        let n = grid.len();
        let mut items: Vec<(f64, u32)> = (0..n)
            .map(|i| {
                let c = grid.coords(i);
                (c.iter().map(|x| x * x).sum::<f64>(), i as u32)
            })
            .collect();
        // flat index order is lexicographic in the multi-index
        items.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let dims: Vec<usize> = grid.axes.iter().map(|a| 2 * a.len - 1).collect();
        let mut offset_strides = vec![1usize; dims.len()];
        for a in (0..dims.len().saturating_sub(1)).rev() {
            offset_strides[a] = offset_strides[a + 1] * dims[a + 1];
        }
        let offset_len = offset_strides[0] * dims[0];
        let center = grid
            .axes
            .iter()
            .zip(&offset_strides)
            .map(|(a, s)| ((a.len - 1) * s) as isize)
            .sum();
        let key = |flat: usize| -> isize {
            grid.multi(flat)
                .iter()
                .zip(&offset_strides)
                .map(|(k, s)| (k * s) as isize)
                .sum()
        };
        Candidates {
            keys: items.iter().map(|&(_, i)| key(i as usize)).collect(),
            norms: items.iter().map(|&(n2, _)| n2.sqrt()).collect(),
            order: items.into_iter().map(|(_, i)| i).collect(),
            offset_strides,
            offset_len,
            center,
        }
    }

    /// Number of candidates inside the closed ball of radius `r`.
    pub fn ball_len(&self, r: f64) -> usize {
        if r.is_infinite() {
            return self.order.len();
        }
        let r = r * (1.0 + 1e-12);
        self.norms.partition_point(|n| *n <= r)
    }

    pub fn key_of_cell(&self, grid: &PositionGrid, cell: usize) -> isize {
        grid.multi(cell)
            .iter()
            .zip(&self.offset_strides)
            .map(|(k, s)| (k * s) as isize)
            .sum()
    }

    /// Trade cost table `C_t(s, (0, (k_y - k_v) * step))` over all offsets.
    pub fn cost_table(&self, cost: &dyn CostFunction, t: usize, s: &[f64], grid: &PositionGrid) -> Vec<f64> {
        let mut table = vec![0.0; self.offset_len];
        table.par_iter_mut().enumerate().for_each(|(o, out)| {
            let mut rest = o;
            let y: Vec<f64> = grid
                .axes
                .iter()
                .zip(&self.offset_strides)
                .map(|(ax, st)| {
                    let k = rest / st;
                    rest %= st;
                    ax.trade(k, ax.len - 1)
                })
                .collect();
            *out = cost.risky_cost(t, s, &y);
        });
        table
    }

    /// Position in the cost table of the trade from cell `v` to candidate `j`.
    #[inline]
    pub fn offset(&self, j: usize, v_key: isize) -> usize {
        (self.keys[j] - v_key + self.center) as usize
    }
}

/// Per-node result of the inf step.
pub struct InfNode {
    pub gamma: Vec<f64>,
    pub argmin: Vec<u32>,
    pub candidates: Vec<u32>,
}

/// `gamma_t(node, v) = min over y in grid and ball of C_t(s, (0, y - v)) + theta_t(node, y)`.
#[allow(clippy::too_many_arguments)]
pub fn inf_step_node(
    table: &[f64],
    theta: &[f64],
    cands: &Candidates,
    grid: &PositionGrid,
    radius: &[f64],
    allowed: Option<&[bool]>,
) -> InfNode {
    let cells = grid.len();
    let mut gamma = vec![f64::INFINITY; cells];
    let mut argmin = vec![NO_ARGMIN; cells];
    let mut counts = vec![0u32; cells];
    gamma
        .par_iter_mut()
        .zip(argmin.par_iter_mut())
        .zip(counts.par_iter_mut())
        .enumerate()
        .for_each(|(v, ((g, a), n))| {
            let len = cands.ball_len(radius[v]);
            let vk = cands.key_of_cell(grid, v);
            let mut best = f64::INFINITY;
            let mut arg = NO_ARGMIN;
            let mut count = 0u32;
            for j in 0..len {
                let y = cands.order[j];
                if let Some(mask) = allowed {
                    if !mask[y as usize] {
                        continue;
                    }
                }
                count += 1;
                let val = table[cands.offset(j, vk)] + theta[y as usize];
                if val < best {
                    best = val;
                    arg = y;
                }
            }
            *g = best;
            *a = arg;
            *n = count;
        });
    InfNode { gamma, argmin, candidates: counts }
}

/// Full inf step over a layer, for callers that already hold the radii.
pub fn inf_step(
    theta: Vec<f64>,
    cost: &dyn CostFunction,
    lattice: &SupportLattice,
    grid: &PositionGrid,
    t: usize,
    radius: &RadiusBound,
    convex: bool,
) -> (ValueLayer, Vec<u32>) {
    let cands = Candidates::new(grid);
    let cells = grid.len();
    let nodes = lattice.nodes[t].len();
    let mut gamma = Vec::with_capacity(nodes * cells);
    let mut argmin = Vec::with_capacity(nodes * cells);
    for node in 0..nodes {
        let s = lattice.nodes[t][node].coords();
        let table = cands.cost_table(cost, t, s, grid);
        let r = inf_step_node(
            &table,
            &theta[node * cells..(node + 1) * cells],
            &cands,
            grid,
            radius.node_radius(node),
            None,
        );
        gamma.extend(r.gamma);
        argmin.extend(r.argmin);
    }
    (ValueLayer { t, nodes, cells, gamma, theta: Some(theta), convex }, argmin)
}
