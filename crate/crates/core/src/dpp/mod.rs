//! Backward recursion for the minimal super-hedging cost.
//!
//! Starting from `gamma_T(s, v) = g^1(s) + C_T(s, (0, g^(2)(s) - v))`, each
//! step takes the max over successor states (`theta_t`) and then the min over
//! the next position `y` of `C_t(s, (0, y - v)) + theta_t(s, y)`. Positions
//! live on a [`PositionGrid`]; the min runs over grid points inside a ball
//! whose radius comes from a memoized zero-claim solve.

pub mod export;
pub mod grid;
pub mod layer;
pub mod radius;
pub mod rollout;

use std::sync::{Arc, OnceLock};

use serde::Serialize;

pub use grid::{GridAxis, PositionGrid};
pub use layer::{Candidates, ValueLayer, NO_ARGMIN};
pub use radius::RadiusBound;
pub use rollout::{rollout, PathReport, RolloutReport};

use crate::error::{Error, Result};
use crate::market::{CostFunction, CostModel, DeltaLaw, MarketState, Position};
use crate::payoff::Payoff;
use crate::sphere::sphere_sample;
use crate::support::{build_lattice, SupportLattice, SupportModel, DEFAULT_NODE_CAP, DEFAULT_RECOMBINATION_TOL};

/// Midpoint-convexity gap above which a convex layer is reported.
pub const CONVEXITY_TOL: f64 = 1e-8;

/// Radius used when the sphere infimum vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackRadius {
    /// `10 * max |g^(2)|` over terminal nodes plus the largest grid norm.
    Auto,
    Fixed(f64),
    /// Fail with `RadiusDegenerate` instead.
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub tol_aip: f64,
    pub tol_saip: f64,
    pub radius_eps: f64,
    pub recombination_tol: f64,
    pub node_cap: usize,
    pub fallback: FallbackRadius,
    pub sphere_samples: usize,
    /// Restrict candidates to the orthogonal complement of the estimated
    /// null space when the market is sub-additive.
    pub laip_reduction: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_aip: 1e-8,
            tol_saip: 1e-8,
            radius_eps: 1e-10,
            recombination_tol: DEFAULT_RECOMBINATION_TOL,
            node_cap: DEFAULT_NODE_CAP,
            fallback: FallbackRadius::Auto,
            sphere_samples: 128,
            laip_reduction: false,
        }
    }
}

/// Minimizing post-trade grid point per `(t, node, cell)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HedgePolicy {
    pub cells: usize,
    /// `argmin[t][node * cells + cell]`, for `t < T`.
    pub argmin: Vec<Vec<u32>>,
}

impl HedgePolicy {
    pub fn action(&self, t: usize, node: usize, cell: usize) -> Option<usize> {
        match self.argmin[t][node * self.cells + cell] {
            NO_ARGMIN => None,
            y => Some(y as usize),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerStats {
    pub t: usize,
    pub nodes: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub infinite_cells: usize,
    pub infimum_min: Option<f64>,
    pub radius_min: Option<f64>,
    pub radius_max: Option<f64>,
    pub mean_candidates: Option<f64>,
    pub fallback_nodes: usize,
    /// [`ValueLayer::midpoint_violation`] for layers whose costs are all
    /// convex. Positive values come from restricting trades to the grid in
    /// two or more dimensions.
    pub convexity_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOutput {
    pub price: f64,
    /// `layers[t]` for `t = 0..=T`.
    pub layers: Vec<ValueLayer>,
    pub policy: HedgePolicy,
    /// `radii[t]` for `t < T`.
    pub radii: Vec<RadiusBound>,
    pub diagnostics: Vec<LayerStats>,
    /// `g(s)` per terminal node.
    pub terminal: Vec<Position>,
}

/// How the inf step bounds its search.
enum RadiusPlan<'a> {
    /// Infima from this solve's own `theta` (valid for zero claims).
    Own(DeltaLaw),
    /// Infima from a finished zero-claim solve.
    Borrowed { zero: &'a SolveOutput, delta: DeltaLaw },
    /// No homogeneity law: the fallback radius everywhere.
    Fallback,
}

/// A market, a lattice and a grid, ready to price claims.
#[derive(Debug)]
pub struct HedgingProblem {
    market: CostModel,
    support: SupportModel,
    lattice: SupportLattice,
    grid: PositionGrid,
    config: SolverConfig,
    candidates: Candidates,
    sphere: Vec<Vec<f64>>,
    zero: OnceLock<Result<Arc<SolveOutput>>>,
    horizon_zero: OnceLock<Result<Arc<SolveOutput>>>,
}

impl HedgingProblem {
    pub fn new(
        market: CostModel,
        support: SupportModel,
        s0: MarketState,
        horizon: usize,
        grid: PositionGrid,
        config: SolverConfig,
    ) -> Result<Self> {
        market.validate_state(&s0)?;
        if grid.dim() != market.assets() {
            return Err(Error::InvalidGrid(format!(
                "grid has {} axes, market has {} risky assets",
                grid.dim(),
                market.assets()
            )));
        }
        let lattice = build_lattice(&support, &s0, horizon, config.recombination_tol, config.node_cap)?;
        for (t, layer) in lattice.nodes.iter().enumerate() {
            for s in layer {
                market.validate_state(s).map_err(|e| match e {
                    Error::InvalidState(m) => Error::InvalidState(format!("lattice node at t={t}: {m}")),
                    other => other,
                })?;
            }
        }
        let sphere = sphere_sample(grid.dim(), config.sphere_samples);
        Ok(HedgingProblem {
            candidates: Candidates::new(&grid),
            market,
            support,
            lattice,
            grid,
            config,
            sphere,
            zero: OnceLock::new(),
            horizon_zero: OnceLock::new(),
        })
    }

    pub fn market(&self) -> &CostModel {
        &self.market
    }

    pub fn support(&self) -> &SupportModel {
        &self.support
    }

    pub fn lattice(&self) -> &SupportLattice {
        &self.lattice
    }

    pub fn grid(&self) -> &PositionGrid {
        &self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn sphere(&self) -> &[Vec<f64>] {
        &self.sphere
    }

    pub fn horizon(&self) -> usize {
        self.lattice.horizon()
    }

    /// Prices `payoff` at the root with zero initial risky holdings.
    pub fn solve(&self, payoff: &Payoff) -> Result<SolveOutput> {
        let terminal = payoff.terminal_values(&self.market, &self.lattice)?;
        let flags = self.market.flags();
        let zero;
        let plan = if let Some(delta) = flags.delta {
            zero = self.zero_solve()?;
            RadiusPlan::Borrowed { zero: &zero, delta }
        } else if self.market.horizon_market().is_some() {
            zero = self.horizon_zero_solve()?;
            RadiusPlan::Borrowed { zero: &zero, delta: DeltaLaw::Identity }
        } else {
            RadiusPlan::Fallback
        };
        let out = self.run(&self.market, terminal, plan, self.config.laip_reduction && flags.sub_additive)?;
        let root = out.layers[0].gamma_at(0, self.grid.zero_index());
        if root == f64::INFINITY {
            return Err(Error::NotHedgeable("root hedging cost is +inf on the grid".into()));
        }
        Ok(out)
    }

    /// Memoized zero-claim solve in the actual market.
    pub fn zero_solve(&self) -> Result<Arc<SolveOutput>> {
        self.zero
            .get_or_init(|| {
                let terminal = Payoff::Zero.terminal_values(&self.market, &self.lattice)?;
                let plan;
                let horizon;
                if let Some(delta) = self.market.flags().delta {
                    plan = RadiusPlan::Own(delta);
                } else if self.market.horizon_market().is_some() {
                    horizon = self.horizon_zero_solve()?;
                    plan = RadiusPlan::Borrowed { zero: &horizon, delta: DeltaLaw::Identity };
                } else {
                    plan = RadiusPlan::Fallback;
                }
                self.run(&self.market, terminal, plan, false).map(Arc::new)
            })
            .clone()
    }

    /// Memoized zero-claim solve in the conic market priced by the horizon cost.
    pub fn horizon_zero_solve(&self) -> Result<Arc<SolveOutput>> {
        self.horizon_zero
            .get_or_init(|| {
                let hm = self.market.horizon_market().ok_or_else(|| {
                    Error::NotApplicable("horizon market has no closed form for custom costs".into())
                })?;
                let terminal = Payoff::Zero.terminal_values(&self.market, &self.lattice)?;
                self.run(&hm, terminal, RadiusPlan::Own(DeltaLaw::Identity), false).map(Arc::new)
            })
            .clone()
    }

    fn fallback_radius(&self, terminal: &[Position]) -> Option<f64> {
        match self.config.fallback {
            FallbackRadius::Auto => {
                let g = terminal
                    .iter()
                    .flat_map(|p| p.risky.iter())
                    .fold(0.0f64, |m, x| m.max(x.abs()));
                Some(10.0 * g + self.grid.max_norm())
            }
            FallbackRadius::Fixed(r) => Some(r),
            FallbackRadius::Disabled => None,
        }
    }

    fn run(
        &self,
        cost: &dyn CostFunction,
        terminal: Vec<Position>,
        plan: RadiusPlan<'_>,
        laip: bool,
    ) -> Result<SolveOutput> {
        let big_t = self.horizon();
        let grid = &self.grid;
        let cells = grid.len();
        let convex = cost.flags().convex;
        let fallback = self.fallback_radius(&terminal);
        let mut layers: Vec<Option<ValueLayer>> = vec![None; big_t + 1];
        let mut radii: Vec<Option<RadiusBound>> = vec![None; big_t];
        let mut argmins: Vec<Vec<u32>> = vec![Vec::new(); big_t];
        let mut diagnostics = Vec::with_capacity(big_t + 1);

        let last = layer::terminal_layer(cost, &self.lattice, grid, &terminal, convex);
        diagnostics.push(stats(&last, grid, None, None));
        layers[big_t] = Some(last);

        for t in (0..big_t).rev() {
            let theta = layer::sup_step(layers[t + 1].as_ref().unwrap(), &self.lattice, t);
            let nodes = self.lattice.nodes[t].len();
            let (infimum, delta) = match &plan {
                RadiusPlan::Own(delta) => {
                    let inf = (0..nodes)
                        .map(|n| {
                            radius::sphere_infimum(
                                cost,
                                t,
                                self.lattice.nodes[t][n].coords(),
                                &theta[n * cells..(n + 1) * cells],
                                grid,
                                &self.sphere,
                                delta,
                            )
                        })
                        .collect();
                    (inf, delta.clone())
                }
                RadiusPlan::Borrowed { zero, delta } => (zero.radii[t].infimum.clone(), delta.clone()),
                RadiusPlan::Fallback => (vec![0.0; nodes], DeltaLaw::Identity),
            };
            let rb = radius::compute_radius(
                cost,
                &self.lattice,
                grid,
                t,
                &theta,
                infimum,
                &delta,
                self.config.radius_eps,
                fallback,
            )?;
            let fb = rb.fallback.iter().filter(|f| **f).count();
            if fb > 0 && !matches!(plan, RadiusPlan::Fallback) {
                log::warn!("t={t}: sphere infimum <= {} at {fb} node(s); using fallback radius", self.config.radius_eps);
            }

            let masks: Vec<Option<Vec<bool>>> = match (&plan, laip) {
                (RadiusPlan::Borrowed { zero, delta }, true) => (0..nodes)
                    .map(|n| self.laip_mask(cost, zero, delta, t, n))
                    .collect(),
                _ => vec![None; nodes],
            };

            let mut gamma = Vec::with_capacity(nodes * cells);
            let mut argmin = Vec::with_capacity(nodes * cells);
            let mut counts: u64 = 0;
            for node in 0..nodes {
                let s = self.lattice.nodes[t][node].coords();
                let table = self.candidates.cost_table(cost, t, s, grid);
                let r = layer::inf_step_node(
                    &table,
                    &theta[node * cells..(node + 1) * cells],
                    &self.candidates,
                    grid,
                    rb.node_radius(node),
                    masks[node].as_deref(),
                );
                counts += r.candidates.iter().map(|c| *c as u64).sum::<u64>();
                gamma.extend(r.gamma);
                argmin.extend(r.argmin);
            }
            let vl = ValueLayer { t, nodes, cells, gamma, theta: Some(theta), convex };
            if vl.gamma.iter().all(|g| *g == f64::INFINITY) {
                return Err(Error::NotHedgeable(format!("every cell of layer t={t} is +inf")));
            }
            let st = stats(&vl, grid, Some(&rb), Some(counts as f64 / (nodes * cells) as f64));
            if let Some(gap) = st.convexity_gap.filter(|g| *g > CONVEXITY_TOL) {
                log::warn!("t={t}: grid-restricted layer misses midpoint convexity by {gap:e}");
            }
            diagnostics.push(st);
            layers[t] = Some(vl);
            radii[t] = Some(rb);
            argmins[t] = argmin;
        }
        diagnostics.reverse();
        let layers: Vec<ValueLayer> = layers.into_iter().map(Option::unwrap).collect();
        Ok(SolveOutput {
            price: layers[0].gamma_at(0, grid.zero_index()),
            layers,
            policy: HedgePolicy { cells, argmin: argmins },
            radii: radii.into_iter().map(Option::unwrap).collect(),
            diagnostics,
            terminal,
        })
    }

    /// Grid points orthogonal to the node's estimated null space, when it is
    /// nontrivial and symmetric.
    fn laip_mask(
        &self,
        cost: &dyn CostFunction,
        zero: &SolveOutput,
        delta: &DeltaLaw,
        t: usize,
        node: usize,
    ) -> Option<Vec<bool>> {
        let est = crate::arbitrage::node_null_space(self, cost, zero, delta, t, node);
        if est.basis.is_empty() || !est.symmetric {
            return None;
        }
        Some(
            (0..self.grid.len())
                .map(|c| {
                    let y = self.grid.coords(c);
                    let scale = y.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
                    est.basis.iter().all(|b| {
                        let p: f64 = b.iter().zip(&y).map(|(u, v)| u * v).sum();
                        p.abs() <= 1e-9 * scale
                    })
                })
                .collect(),
        )
    }

    /// Lipschitz-times-step slack covering one grid step of trading error.
    pub fn lipschitz_slack(&self) -> f64 {
        self.lattice
            .nodes
            .iter()
            .flatten()
            .map(|s| {
                self.market
                    .lipschitz(s.coords())
                    .iter()
                    .zip(&self.grid.axes)
                    .map(|(l, a)| l * a.step)
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

fn stats(layer: &ValueLayer, grid: &PositionGrid, rb: Option<&RadiusBound>, mean_candidates: Option<f64>) -> LayerStats {
    let finite = layer.gamma.iter().filter(|g| g.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), g| (a.min(*g), b.max(*g)));
    let fin = |x: f64| if x.is_finite() { Some(x) } else { None };
    LayerStats {
        t: layer.t,
        nodes: layer.nodes,
        gamma_min: lo,
        gamma_max: hi,
        infinite_cells: layer.gamma.iter().filter(|g| g.is_infinite()).count(),
        infimum_min: rb.and_then(|r| fin(r.infimum.iter().copied().fold(f64::INFINITY, f64::min))),
        radius_min: rb.and_then(|r| fin(r.radius.iter().copied().fold(f64::INFINITY, f64::min))),
        radius_max: rb.and_then(|r| fin(r.radius.iter().copied().fold(f64::NEG_INFINITY, f64::max))),
        mean_candidates,
        fallback_nodes: rb.map_or(0, |r| r.fallback.iter().filter(|f| **f).count()),
        convexity_gap: layer.convex.then(|| layer.midpoint_violation(grid)),
    }
}
