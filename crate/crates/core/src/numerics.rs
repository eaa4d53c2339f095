//! Uniform time grids, grid-sampled paths and trapezoid quadrature.
//!
//! Every solver in the crate works on a [`TimeGrid`] with nodes
//! `t_j = jT/N` and represents functions of time as [`GridPath`]s.
//! The slice helpers at the bottom are the hot-loop versions used
//! internally; the path-level functions validate their inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    n_steps: usize,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(n_steps: usize, horizon: f64) -> Result<Self> {
        if n_steps < 2 {
            return Err(Error::invalid("grid.n_steps", format!("need at least 2 steps, got {n_steps}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid("market.horizon", format!("must be positive and finite, got {horizon}")));
        }
        Ok(Self { n_steps, horizon })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Node `t_j`; the last node is exactly `T`.
    pub fn node(&self, j: usize) -> f64 {
        if j >= self.n_steps {
            self.horizon
        } else {
            j as f64 * self.horizon / self.n_steps as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|j| self.node(j)).collect()
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.horizon.max(1.0);
        if !(t >= -slack && t <= self.horizon + slack) {
            return Err(Error::TimeOutOfRange { t, horizon: self.horizon });
        }
        Ok(())
    }

    /// Index of the node equal to `t` (up to a relative 1e-9 slack).
    pub fn node_index(&self, t: f64) -> Result<usize> {
        self.check_time(t)?;
        let j = (t / self.step()).round().clamp(0.0, self.n_steps as f64) as usize;
        if (self.node(j) - t).abs() > 1e-9 * self.horizon.max(1.0) {
            return Err(Error::NotAGridNode { t });
        }
        Ok(j)
    }

    /// Cell index `j` and weight `w` with `t = (1-w) t_j + w t_{j+1}`.
    pub fn locate(&self, t: f64) -> Result<(usize, f64)> {
        self.check_time(t)?;
        let t = t.clamp(0.0, self.horizon);
        let x = t / self.step();
        let j = (x.floor() as usize).min(self.n_steps - 1);
        let w = (x - j as f64).clamp(0.0, 1.0);
        Ok((j, w))
    }

    pub fn ensure_same(&self, other: &TimeGrid) -> Result<()> {
        if self.n_steps != other.n_steps || self.horizon != other.horizon {
            return Err(Error::GridMismatch {
                expected: self.n_steps,
                expected_horizon: self.horizon,
                found: other.n_steps,
                found_horizon: other.horizon,
            });
        }
        Ok(())
    }
}

/// A real function of time sampled at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl GridPath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::invalid("path", format!("expected {} values, got {}", grid.n_nodes(), values.len())));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.n_nodes()] }
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Linear interpolation between nodes.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let (j, w) = self.grid.locate(t)?;
        Ok((1.0 - w) * self.values[j] + w * self.values[j + 1])
    }

    pub fn sup_distance(&self, other: &GridPath) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(sup_abs_diff(&self.values, &other.values))
    }
}

impl std::ops::Index<usize> for GridPath {
    type Output = f64;
    fn index(&self, j: usize) -> &f64 {
        &self.values[j]
    }
}

/// Trapezoid rule for the integral of `path` over `[t_from, t_to]`.
pub fn trapezoid_integral(path: &GridPath, from_index: usize, to_index: usize) -> Result<f64> {
    let n = path.grid.n_steps;
    if from_index > to_index || to_index > n {
        return Err(Error::IndexOutOfRange { from: from_index, to: to_index, len: n + 1 });
    }
    let h = path.grid.step();
    let v = &path.values;
    let mut acc = 0.0;
    for j in from_index..to_index {
        acc += v[j] + v[j + 1];
    }
    Ok(0.5 * h * acc)
}

/// `I(t_j) = ∫_{t_j}^T path ds` at every node; the last entry is 0.
pub fn cumulative_tail_integral(path: &GridPath) -> GridPath {
    GridPath { grid: path.grid, values: tail_trapezoid(&path.values, path.grid.step()) }
}

/// `∫_0^{t_j} path ds` at every node; the first entry is 0.
pub fn cumulative_integral(path: &GridPath) -> GridPath {
    GridPath { grid: path.grid, values: cumulative_trapezoid(&path.values, path.grid.step()) }
}

pub fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

pub fn tail_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    for j in (0..n.saturating_sub(1)).rev() {
        out[j] = out[j + 1] + 0.5 * h * (values[j] + values[j + 1]);
    }
    out
}

pub fn sup_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Habit path `e^{-δt_j}(z0 + ∫_0^{t_j} δ e^{δs} c_s ds)` with the
/// integral by cumulative trapezoid.
pub fn habit_from_rate(rate: &[f64], delta: f64, z0: f64, grid: &TimeGrid) -> Vec<f64> {
    let h = grid.step();
    let mut out = Vec::with_capacity(rate.len());
    let mut acc = 0.0;
    let mut prev = delta * rate[0];
    out.push(z0);
    for (j, &c) in rate.iter().enumerate().skip(1) {
        let t = grid.node(j);
        let cur = delta * (delta * t).exp() * c;
        acc += 0.5 * h * (prev + cur);
        prev = cur;
        out.push((-delta * t).exp() * (z0 + acc));
    }
    out
}

/// Bisection for a decreasing-minus-increasing style root: finds `x` in
/// `[lo, hi]` with `f(x) = 0` given `f(lo)` and `f(hi)` of opposite sign.
pub fn bisect(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::BracketFailure { lo, hi, f_lo: fa, f_hi: fb });
    }
    for _ in 0..400 {
        let mid = 0.5 * (a + b);
        if b - a <= tol || mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}
