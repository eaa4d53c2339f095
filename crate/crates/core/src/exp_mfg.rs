//! Exponential (CARA) regime: closed-form best response, the decoupled
//! fixed-point map on the mean habit path, and its Picard solver.
//!
//! Notation: `τ(t) = T + 1 − t`, `κ = (μ/σ)²β`, `I(t) = ∫_t^T Z̄`,
//! `A(t) = ∫_0^t I/τ²`, `B(t) = ∫_0^t Z̄/τ`, `J = A(T) − B(T)`.

use crate::error::{Error, Result};
use crate::model::{AgentClass, MarketParams, Regime, TypeDistribution};
use crate::numerics::{cumulative_trapezoid, sup_abs_diff, tail_trapezoid, GridPath, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct ExpEquilibrium {
    pub zbar: GridPath,
    pub xbar_t: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpValueCoeffs {
    pub a: f64,
    pub b: f64,
}

/// Deterministic ingredients of the candidate strategy for one class.
///
/// Wealth is `X_t = mean_wealth[j] + vol[j]·W_t`, investment is
/// `pi_star[j]` and consumption is `X_t / τ_j + intercept[j]`.
#[derive(Debug, Clone)]
pub struct ExpClassPaths {
    pub pi_star: Vec<f64>,
    pub intercept: Vec<f64>,
    pub mean_wealth: Vec<f64>,
    pub vol: Vec<f64>,
    pub time_to_go: Vec<f64>,
}

/// Integrals of one habit path that every formula in the regime reuses.
#[derive(Debug, Clone)]
struct HabitIntegrals {
    tail: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl HabitIntegrals {
    fn j(&self) -> f64 {
        let n = self.a.len() - 1;
        self.a[n] - self.b[n]
    }
}

/// Grid-dependent constants shared across Picard iterates.
struct Workspace {
    grid: TimeGrid,
    t: Vec<f64>,
    tau: Vec<f64>,
    growth: Vec<f64>,
    decay: Vec<f64>,
}

impl Workspace {
    fn new(grid: TimeGrid, delta: f64) -> Self {
        let t = grid.nodes();
        let horizon = grid.horizon();
        let tau = t.iter().map(|&s| horizon + 1.0 - s).collect();
        let growth = t.iter().map(|&s| (delta * s).exp()).collect();
        let decay = t.iter().map(|&s| (-delta * s).exp()).collect();
        Self { grid, t, tau, growth, decay }
    }

    fn integrals(&self, z: &[f64]) -> HabitIntegrals {
        let h = self.grid.step();
        let tail = tail_trapezoid(z, h);
        let weighted: Vec<f64> = tail.iter().zip(&self.tau).map(|(i, s)| i / (s * s)).collect();
        let over: Vec<f64> = z.iter().zip(&self.tau).map(|(v, s)| v / s).collect();
        HabitIntegrals { a: cumulative_trapezoid(&weighted, h), b: cumulative_trapezoid(&over, h), tail }
    }
}

#[derive(Debug, Clone, Copy)]
struct Moments {
    theta: f64,
    kappa: f64,
    denom: f64,
}

impl Moments {
    fn new(dist: &TypeDistribution, horizon: f64) -> Result<Self> {
        let theta = dist.mean_theta();
        let kappa = dist.expect(|c| c.sharpe_sq() * c.risk);
        let denom = (1.0 - theta) * horizon + 1.0;
        if !(denom > 0.0) {
            return Err(Error::domain("(1 - E[theta])T + 1 must be positive", denom));
        }
        Ok(Self { theta, kappa, denom })
    }
}

fn check_inputs(params: &MarketParams, zbar: &GridPath) -> Result<()> {
    params.validate(Regime::Exponential)?;
    let grid = zbar.grid();
    if grid.horizon() != params.horizon {
        return Err(Error::GridMismatch {
            expected: grid.n_steps(),
            expected_horizon: params.horizon,
            found: grid.n_steps(),
            found_horizon: grid.horizon(),
        });
    }
    Ok(())
}

fn check_class(cls: &AgentClass) -> Result<()> {
    cls.validate(Regime::Exponential, "class")
}

fn decoupled_xbar(params: &MarketParams, m: &Moments, ints: &HabitIntegrals) -> f64 {
    let big_t = params.horizon;
    (params.x0 + 0.25 * m.kappa * (3.0 * big_t * big_t + 4.0 * big_t) + m.theta * (big_t + 1.0) * ints.j()) / m.denom
}

/// `G(t_j, Z̄)` at every node.
fn g_values(ws: &Workspace, params: &MarketParams, m: &Moments, ints: &HabitIntegrals) -> Vec<f64> {
    let big_t = params.horizon;
    let t1 = big_t + 1.0;
    let j_int = ints.j();
    let constant = params.x0 / t1 * (1.0 - m.theta / m.denom)
        - m.theta * m.theta * j_int / m.denom
        - 0.25 * m.theta * m.kappa * (3.0 * big_t * big_t + 4.0 * big_t) / (t1 * m.denom);
    (0..ws.t.len())
        .map(|j| {
            constant + m.theta * ints.a[j] - m.theta * ints.b[j] - m.theta * ints.tail[j] / ws.tau[j]
                + 0.25 * m.kappa * (t1 + 2.0 * ws.t[j] - 1.0 / t1)
        })
        .collect()
}

fn phi_values(ws: &Workspace, params: &MarketParams, m: &Moments, z: &[f64]) -> Vec<f64> {
    let ints = ws.integrals(z);
    let g = g_values(ws, params, m, &ints);
    let h = ws.grid.step();
    let delta = params.delta;
    let mut out = Vec::with_capacity(z.len());
    let mut acc = 0.0;
    let mut prev = delta * (m.theta * z[0] + g[0]);
    out.push(params.z0);
    for j in 1..z.len() {
        let cur = delta * ws.growth[j] * (m.theta * z[j] + g[j]);
        acc += 0.5 * h * (prev + cur);
        prev = cur;
        out.push(ws.decay[j] * (params.z0 + acc));
    }
    out
}

fn mean_wealth_values(
    ws: &Workspace,
    cls: &AgentClass,
    params: &MarketParams,
    xbar_t: f64,
    ints: &HabitIntegrals,
) -> Vec<f64> {
    let t1 = params.horizon + 1.0;
    let kappa = cls.sharpe_sq() * cls.risk;
    (0..ws.t.len())
        .map(|j| {
            let tau = ws.tau[j];
            tau * (params.x0 / t1
                + cls.theta * (ints.a[j] - ints.b[j])
                + (cls.theta * xbar_t + 0.25 * kappa) * (1.0 / tau - 1.0 / t1)
                + 0.75 * kappa * ws.t[j])
        })
        .collect()
}

fn mean_terminal_wealth(
    ws: &Workspace,
    dist: &TypeDistribution,
    params: &MarketParams,
    xbar_t: f64,
    ints: &HabitIntegrals,
) -> f64 {
    let n = ws.t.len() - 1;
    dist.iter().map(|(c, w)| w * mean_wealth_values(ws, c, params, xbar_t, ints)[n]).sum()
}

/// `I(t)` for an arbitrary `t`, exact for the piecewise-linear interpolant.
fn tail_at(zbar: &GridPath, tail: &[f64], t: f64) -> Result<f64> {
    let grid = zbar.grid();
    let (j, w) = grid.locate(t)?;
    let z_t = (1.0 - w) * zbar[j] + w * zbar[j + 1];
    let rest = (1.0 - w) * grid.step();
    Ok(tail[j + 1] + 0.5 * rest * (z_t + zbar[j + 1]))
}

/// Value-function coefficients `V(t,x) = −exp(a(t)x + b(t))`.
pub fn exp_value_coeffs(
    t: f64,
    cls: &AgentClass,
    params: &MarketParams,
    zbar: &GridPath,
    xbar_t: f64,
) -> Result<ExpValueCoeffs> {
    check_inputs(params, zbar)?;
    check_class(cls)?;
    zbar.grid().check_time(t)?;
    let tail = tail_trapezoid(zbar.values(), zbar.grid().step());
    let i_t = tail_at(zbar, &tail, t)?;
    let tau = params.horizon + 1.0 - t;
    let beta = cls.risk;
    let a = -1.0 / (beta * tau);
    let b = cls.theta * xbar_t / (beta * tau) + cls.theta / (beta * tau) * i_t + tau.ln()
        - 0.25 * cls.sharpe_sq() * (tau - 1.0 / tau);
    Ok(ExpValueCoeffs { a, b })
}

/// Optimal amount invested and consumption rate at `(t, x)`.
pub fn exp_strategy(
    t: f64,
    x: f64,
    cls: &AgentClass,
    params: &MarketParams,
    zbar: &GridPath,
    xbar_t: f64,
) -> Result<(f64, f64)> {
    check_inputs(params, zbar)?;
    check_class(cls)?;
    zbar.grid().check_time(t)?;
    let tail = tail_trapezoid(zbar.values(), zbar.grid().step());
    let i_t = tail_at(zbar, &tail, t)?;
    let z_t = zbar.value_at(t)?;
    let tau = params.horizon + 1.0 - t;
    let beta = cls.risk;
    let pi = beta * cls.mu / (cls.sigma * cls.sigma) * tau;
    let c = (x - cls.theta * xbar_t) / tau + cls.theta * z_t - cls.theta / tau * i_t
        + 0.25 * beta * cls.sharpe_sq() * (tau - 1.0 / tau);
    Ok((pi, c))
}

/// Population mean consumption `E[C*(t, X*_t)]` at a grid node.
pub fn exp_mean_consumption(
    t: f64,
    dist: &TypeDistribution,
    params: &MarketParams,
    zbar: &GridPath,
    xbar_t: f64,
) -> Result<f64> {
    check_inputs(params, zbar)?;
    dist.validate(Regime::Exponential)?;
    let j = zbar.grid().node_index(t)?;
    let ws = Workspace::new(*zbar.grid(), params.delta);
    let m = Moments::new(dist, params.horizon)?;
    let ints = ws.integrals(zbar.values());
    Ok(mean_consumption_at(&ws, params, &m, &ints, zbar.values(), xbar_t, j))
}

fn mean_consumption_at(
    ws: &Workspace,
    params: &MarketParams,
    m: &Moments,
    ints: &HabitIntegrals,
    z: &[f64],
    xbar_t: f64,
    j: usize,
) -> f64 {
    let t1 = params.horizon + 1.0;
    (params.x0 - m.theta * xbar_t) / t1 + m.theta * z[j] + m.theta * ints.a[j]
        - m.theta * ints.b[j]
        - m.theta * ints.tail[j] / ws.tau[j]
        + 0.25 * m.kappa * (t1 + 2.0 * ws.t[j] - 1.0 / t1)
}

/// The habit-independent part of mean consumption once `X̄_T` is decoupled.
#[allow(non_snake_case)]
pub fn exp_G(t: f64, zbar: &GridPath, dist: &TypeDistribution, params: &MarketParams) -> Result<f64> {
    check_inputs(params, zbar)?;
    dist.validate(Regime::Exponential)?;
    let j = zbar.grid().node_index(t)?;
    let ws = Workspace::new(*zbar.grid(), params.delta);
    let m = Moments::new(dist, params.horizon)?;
    let ints = ws.integrals(zbar.values());
    Ok(g_values(&ws, params, &m, &ints)[j])
}

/// Mean terminal wealth implied by a habit path.
pub fn exp_decoupled_xbar(zbar: &GridPath, dist: &TypeDistribution, params: &MarketParams) -> Result<f64> {
    check_inputs(params, zbar)?;
    dist.validate(Regime::Exponential)?;
    let ws = Workspace::new(*zbar.grid(), params.delta);
    let m = Moments::new(dist, params.horizon)?;
    Ok(decoupled_xbar(params, &m, &ws.integrals(zbar.values())))
}

/// Habit update map.
///
/// Written in integrating-factor form,
/// `Φ(t) = e^{−δt}(z0 + ∫_0^t δe^{δs}(E[θ]Z̄_s + G(s, Z̄)) ds)`,
/// which is the solution of `dΦ = ((−δ + δE[θ])Z̄ + δG) dt` rewritten
/// against the habit kernel; its discrete fixed point therefore
/// satisfies the trapezoid habit identity exactly.
pub fn exp_phi(zbar: &GridPath, dist: &TypeDistribution, params: &MarketParams) -> Result<GridPath> {
    check_inputs(params, zbar)?;
    dist.validate(Regime::Exponential)?;
    let ws = Workspace::new(*zbar.grid(), params.delta);
    let m = Moments::new(dist, params.horizon)?;
    GridPath::new(*zbar.grid(), phi_values(&ws, params, &m, zbar.values()))
}

/// Mean wealth `E[X*_t | class]` at a grid node.
pub fn exp_mean_wealth(t: f64, cls: &AgentClass, params: &MarketParams, zbar: &GridPath, xbar_t: f64) -> Result<f64> {
    check_inputs(params, zbar)?;
    check_class(cls)?;
    let j = zbar.grid().node_index(t)?;
    let ws = Workspace::new(*zbar.grid(), params.delta);
    let ints = ws.integrals(zbar.values());
    Ok(mean_wealth_values(&ws, cls, params, xbar_t, &ints)[j])
}

/// Picard iteration on the habit path starting from `Z̄ ≡ z0`.
pub fn solve_exp_mfe(
    dist: &TypeDistribution,
    params: &MarketParams,
    grid: TimeGrid,
    tol: f64,
    max_iter: usize,
) -> Result<ExpEquilibrium> {
    params.validate(Regime::Exponential)?;
    dist.validate(Regime::Exponential)?;
    if !(tol > 0.0) {
        return Err(Error::invalid("solver.tol", format!("must be > 0, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::invalid("solver.max_iter", "must be >= 1"));
    }
    TimeGrid::new(grid.n_steps(), params.horizon)?.ensure_same(&grid)?;
    let ws = Workspace::new(grid, params.delta);
    let m = Moments::new(dist, params.horizon)?;

    let mut z = vec![params.z0; grid.n_nodes()];
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        let next = phi_values(&ws, params, &m, &z);
        change = sup_abs_diff(&next, &z);
        z = next;
        iterations += 1;
        if !change.is_finite() {
            break;
        }
        if change < tol {
            break;
        }
    }
    if !(change < tol) {
        return Err(Error::NonConvergence { iterations, residual: change });
    }

    let ints = ws.integrals(&z);
    let xbar_t = decoupled_xbar(params, &m, &ints);
    let phi = phi_values(&ws, params, &m, &z);
    let residual = sup_abs_diff(&phi, &z) + (xbar_t - mean_terminal_wealth(&ws, dist, params, xbar_t, &ints)).abs();
    if !(residual < 10.0 * tol) {
        return Err(Error::AuditFailed { residual, limit: 10.0 * tol });
    }
    Ok(ExpEquilibrium { zbar: GridPath::new(grid, z)?, xbar_t, residual, iterations })
}

impl ExpEquilibrium {
    pub fn grid(&self) -> &TimeGrid {
        self.zbar.grid()
    }

    /// Candidate-strategy ingredients for one class on the equilibrium grid.
    pub fn class_paths(&self, cls: &AgentClass, params: &MarketParams) -> ExpClassPaths {
        let ws = Workspace::new(*self.grid(), params.delta);
        let ints = ws.integrals(self.zbar.values());
        let mean_wealth = mean_wealth_values(&ws, cls, params, self.xbar_t, &ints);
        let beta = cls.risk;
        let ratio = cls.mu / cls.sigma;
        let z = self.zbar.values();
        let mut pi_star = Vec::with_capacity(z.len());
        let mut intercept = Vec::with_capacity(z.len());
        let mut vol = Vec::with_capacity(z.len());
        for (j, &tau) in ws.tau.iter().enumerate() {
            pi_star.push(beta * cls.mu / (cls.sigma * cls.sigma) * tau);
            intercept.push(
                -cls.theta * self.xbar_t / tau + cls.theta * z[j] - cls.theta * ints.tail[j] / tau
                    + 0.25 * beta * ratio * ratio * (tau - 1.0 / tau),
            );
            vol.push(tau * ratio * beta);
        }
        ExpClassPaths { pi_star, intercept, mean_wealth, vol, time_to_go: ws.tau }
    }

    /// Mean consumption `E[C*]` at every node.
    pub fn mean_consumption_path(&self, dist: &TypeDistribution, params: &MarketParams) -> Result<Vec<f64>> {
        let ws = Workspace::new(*self.grid(), params.delta);
        let m = Moments::new(dist, params.horizon)?;
        let ints = ws.integrals(self.zbar.values());
        Ok((0..ws.t.len())
            .map(|j| mean_consumption_at(&ws, params, &m, &ints, self.zbar.values(), self.xbar_t, j))
            .collect())
    }
}
