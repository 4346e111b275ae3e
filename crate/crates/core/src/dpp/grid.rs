//! Uniform position grid over the risky holdings.

use serde::Serialize;

use crate::error::{Error, Result};

const GRID_ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub step: f64,
    /// Number of points on the axis.
    pub len: usize,
    /// Index of the point `0`.
    pub zero: usize,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidGrid(format!("step must be > 0, got {step}")));
        }
        if !(min < max) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidGrid(format!("need min < max, got [{min}, {max}]")));
        }
        if min > 0.0 || max < 0.0 {
            return Err(Error::InvalidGrid(format!("[{min}, {max}] does not contain 0")));
        }
        let index = |x: f64| -> Result<i64> {
            let k = (x / step).round();
            if (k - x / step).abs() > GRID_ALIGN_TOL * k.abs().max(1.0) {
                return Err(Error::InvalidGrid(format!("{x} is not a multiple of step {step}")));
            }
            Ok(k as i64)
        };
        let (lo, hi) = (index(min)?, index(max)?);
        Ok(GridAxis { min, max, step, len: (hi - lo + 1) as usize, zero: (-lo) as usize })
    }

    /// Coordinate of index `k`: `(k - zero) * step`.
    pub fn coord(&self, k: usize) -> f64 {
        (k as i64 - self.zero as i64) as f64 * self.step
    }

    /// Trade from index `from` to index `to`.
    pub fn trade(&self, to: usize, from: usize) -> f64 {
        (to as i64 - from as i64) as f64 * self.step
    }
}

/// Tensor grid; flat indices put the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositionGrid {
    pub axes: Vec<GridAxis>,
    #[serde(skip)]
    strides: Vec<usize>,
}

impl PositionGrid {
    pub fn new(axes: Vec<GridAxis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one axis".into()));
        }
        let mut strides = vec![1; axes.len()];
        for a in (0..axes.len() - 1).rev() {
            strides[a] = strides[a + 1] * axes[a + 1].len;
        }
        Ok(PositionGrid { axes, strides })
    }

    pub fn uniform(n: usize, min: f64, max: f64, step: f64) -> Result<Self> {
        let axis = GridAxis::new(min, max, step)?;
        PositionGrid::new(vec![axis; n])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.strides[0] * self.axes[0].len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn zero_index(&self) -> usize {
        self.flat(&self.axes.iter().map(|a| a.zero).collect::<Vec<_>>())
    }

    pub fn flat(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    pub fn multi(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for (a, s) in self.strides.iter().enumerate() {
            out[a] = flat / s;
            flat %= s;
        }
        out
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        self.multi(flat).iter().zip(&self.axes).map(|(k, a)| a.coord(*k)).collect()
    }

    /// Risky trade `y - v` between two grid points.
    pub fn trade(&self, to: usize, from: usize) -> Vec<f64> {
        let (mt, mf) = (self.multi(to), self.multi(from));
        self.axes.iter().enumerate().map(|(a, ax)| ax.trade(mt[a], mf[a])).collect()
    }

    /// Whether any coordinate of the point sits at an axis end.
    pub fn on_boundary(&self, flat: usize) -> bool {
        self.multi(flat)
            .iter()
            .zip(&self.axes)
            .any(|(k, a)| *k == 0 || *k + 1 == a.len)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.axes).all(|(v, a)| *v >= a.min && *v <= a.max)
    }

    /// Largest Euclidean norm of a grid point.
    pub fn max_norm(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| {
                let m = a.coord(0).abs().max(a.coord(a.len - 1).abs());
                m * m
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Multilinear interpolation of `values` (one per grid point) at `x`,
    /// which must lie inside the grid box. Exact at grid points; corners with
    /// zero weight are skipped so infinite neighbours do not leak in.
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> f64 {
        let n = self.dim();
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for (a, ax) in self.axes.iter().enumerate() {
            let pos = x[a] / ax.step + ax.zero as f64;
            let k = (pos.floor().max(0.0) as usize).min(ax.len - 1);
            let f = pos - k as f64;
            if k + 1 >= ax.len || f <= 0.0 {
                base[a] = k;
                frac[a] = 0.0;
            } else {
                base[a] = k;
                frac[a] = f.min(1.0);
            }
        }
        let mut total = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = 0;
            for a in 0..n {
                let up = corner >> a & 1 == 1;
                let wa = if up { frac[a] } else { 1.0 - frac[a] };
                if wa == 0.0 {
                    w = 0.0;
                    break;
                }
                w *= wa;
                idx += (base[a] + up as usize) * self.strides[a];
            }
            if w != 0.0 {
                total += w * values[idx];
            }
        }
        total
    }
}
