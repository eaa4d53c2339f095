//! Power (CRRA) regime: closed-form best response, a-priori bounds, and a
//! damped fixed-point solver in hat space `Ẑ = e^{δt}Z̄`.
//!
//! Per class: `a = ½(μ/σ)² p/(1−p)²`, `γ = θp/(p−1)`, `κ = θpδ/(1−p)`,
//! `q = pθ_T/(1−p)` (terminal exponent), `r = μ²/((1−p)σ²)` and
//! `ℓ = μ²(1−2p)/(2σ²(1−p)²)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AgentClass, MarketParams, Regime, TypeDistribution};
use crate::numerics::{bisect, cumulative_trapezoid, sup_abs_diff, tail_trapezoid, GridPath, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerEquilibrium {
    pub zbar: GridPath,
    pub zhat: GridPath,
    pub xbar_t: f64,
    pub residual: f64,
    pub iterations: usize,
    pub bounds: PowerBounds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerBounds {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub e_const: f64,
    pub m_path: GridPath,
    pub beta_k: Vec<f64>,
}

/// Starting habit path for the outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialHabit {
    /// `Ẑ ≡ z0`.
    #[default]
    Floor,
    /// `Ẑ = M(t)`, the upper edge of the invariant box.
    Ceiling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    #[serde(default)]
    pub initial: InitialHabit,
}

impl Default for PowerSolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 10_000, damping: 0.5, initial: InitialHabit::Floor }
    }
}

/// Deterministic ingredients of the candidate strategy for one class.
///
/// `log X_t = log x0 + log_drift[j] + vol·W_t`; spending is `c_star[j]·X_t`.
#[derive(Debug, Clone)]
pub struct PowerClassPaths {
    pub pi_star: f64,
    pub vol: f64,
    pub c_star: Vec<f64>,
    pub log_drift: Vec<f64>,
    pub mean_wealth: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ClassConsts {
    pub a: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub q: f64,
    pub r: f64,
    pub ell: f64,
    pub pi_star: f64,
    pub vol: f64,
}

impl ClassConsts {
    pub(crate) fn new(cls: &AgentClass, delta: f64) -> Self {
        let p = cls.risk;
        let s2 = cls.sigma * cls.sigma;
        let m2 = cls.mu * cls.mu / s2;
        let pi_star = cls.mu / ((1.0 - p) * s2);
        Self {
            a: 0.5 * m2 * p / ((1.0 - p) * (1.0 - p)),
            gamma: cls.theta * p / (p - 1.0),
            kappa: cls.theta * p * delta / (1.0 - p),
            q: p * cls.theta_terminal() / (1.0 - p),
            r: cls.mu * cls.mu / ((1.0 - p) * s2),
            ell: m2 * (1.0 - 2.0 * p) / (2.0 * (1.0 - p) * (1.0 - p)),
            pi_star,
            vol: pi_star * cls.sigma,
        }
    }
}

/// Per-class arrays that depend on the grid only.
struct ClassGrid {
    k: ClassConsts,
    weight: f64,
    /// `e^{a(t−T)}`
    ea: Vec<f64>,
}

/// Per-class arrays for one habit iterate; `X̄_T` enters only through
/// the scalar `X̄_T^{−q}`.
struct ClassHabit {
    w: Vec<f64>,
    tail: Vec<f64>,
}

struct Workspace {
    grid: TimeGrid,
    t: Vec<f64>,
    growth: Vec<f64>,
    decay: Vec<f64>,
    classes: Vec<ClassGrid>,
    params: MarketParams,
}

impl Workspace {
    fn new(dist: &TypeDistribution, params: &MarketParams, grid: TimeGrid) -> Self {
        let t = grid.nodes();
        let big_t = params.horizon;
        let classes = dist
            .iter()
            .map(|(c, weight)| {
                let k = ClassConsts::new(c, params.delta);
                ClassGrid { ea: t.iter().map(|&s| (k.a * (s - big_t)).exp()).collect(), k, weight }
            })
            .collect();
        Self {
            grid,
            growth: t.iter().map(|&s| (params.delta * s).exp()).collect(),
            decay: t.iter().map(|&s| (-params.delta * s).exp()).collect(),
            t,
            classes,
            params: *params,
        }
    }

    fn habit(&self, cg: &ClassGrid, zbar: &[f64]) -> ClassHabit {
        let w: Vec<f64> = zbar.iter().map(|z| z.powf(cg.k.gamma)).collect();
        let weighted: Vec<f64> = w.iter().zip(&cg.ea).map(|(w, e)| w * e).collect();
        ClassHabit { tail: tail_trapezoid(&weighted, self.grid.step()), w }
    }

    fn habits(&self, zbar: &[f64]) -> Vec<ClassHabit> {
        self.classes.iter().map(|cg| self.habit(cg, zbar)).collect()
    }

    fn consumption(&self, cg: &ClassGrid, ch: &ClassHabit, xbar_t: f64) -> Vec<f64> {
        let xt = xbar_t.powf(-cg.k.q);
        (0..self.t.len()).map(|j| ch.w[j] * cg.ea[j] / (xt + ch.tail[j])).collect()
    }

    fn total_consumption(&self, cg: &ClassGrid, ch: &ClassHabit, xbar_t: f64) -> f64 {
        let xt = xbar_t.powf(-cg.k.q);
        let h = self.grid.step();
        let n = self.t.len();
        let mut acc = 0.0;
        let mut prev = ch.w[0] * cg.ea[0] / (xt + ch.tail[0]);
        for j in 1..n {
            let cur = ch.w[j] * cg.ea[j] / (xt + ch.tail[j]);
            acc += prev + cur;
            prev = cur;
        }
        0.5 * h * acc
    }

    fn c2(&self) -> f64 {
        let p = &self.params;
        p.x0 * (self.classes.iter().map(|c| c.weight * c.k.ell).sum::<f64>() * p.horizon).exp()
    }

    /// Right-hand side of the terminal-wealth equation at `X̄_T = x`.
    fn xbar_rhs(&self, habits: &[ClassHabit], x: f64) -> f64 {
        let spent: f64 =
            self.classes.iter().zip(habits).map(|(cg, ch)| cg.weight * self.total_consumption(cg, ch, x)).sum();
        self.c2() * (-spent).exp()
    }

    /// `Φ₂` on hat space for a habit iterate `Z̄` and terminal mean `X̄_T`.
    fn phi_hat(&self, habits: &[ClassHabit], xbar_t: f64) -> Vec<f64> {
        let n = self.t.len();
        let h = self.grid.step();
        let delta = self.params.delta;
        let mut spend = vec![0.0; n];
        for (cg, ch) in self.classes.iter().zip(habits) {
            let c = self.consumption(cg, ch, xbar_t);
            let cum = cumulative_trapezoid(&c, h);
            for j in 0..n {
                spend[j] += cg.weight * c[j] * self.params.x0 * (cg.k.r * self.t[j] - cum[j]).exp();
            }
        }
        let integrand: Vec<f64> = (0..n).map(|j| delta * self.growth[j] * spend[j]).collect();
        cumulative_trapezoid(&integrand, h).into_iter().map(|v| self.params.z0 + v).collect()
    }

    fn solve_xbar(&self, habits: &[ClassHabit], lo: f64, tol: f64) -> Result<f64> {
        let c2 = self.c2();
        bisect(|x| x - self.xbar_rhs(habits, x), lo, c2, tol)
    }
}

fn check_zbar(params: &MarketParams, path: &GridPath, what: &str) -> Result<()> {
    params.validate(Regime::Power)?;
    if path.grid().horizon() != params.horizon {
        return Err(Error::GridMismatch {
            expected: path.grid().n_steps(),
            expected_horizon: params.horizon,
            found: path.grid().n_steps(),
            found_horizon: path.grid().horizon(),
        });
    }
    if let Some(&v) = path.values().iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::domain(format!("{what} must be strictly positive"), v));
    }
    Ok(())
}

fn check_xbar(xbar_t: f64) -> Result<()> {
    if !(xbar_t.is_finite() && xbar_t > 0.0) {
        return Err(Error::domain("terminal mean wealth must be positive", xbar_t));
    }
    Ok(())
}

fn single_class(cls: &AgentClass, params: &MarketParams, grid: TimeGrid) -> Result<Workspace> {
    cls.validate(Regime::Power, "class")?;
    Ok(Workspace::new(&TypeDistribution::single(*cls), params, grid))
}

/// `g(t)` of the value function `V = g(t)·x^p·Z̄^{…}/p` at a grid node.
pub fn power_g(t: f64, cls: &AgentClass, params: &MarketParams, zbar: &GridPath, xbar_t: f64) -> Result<f64> {
    check_zbar(params, zbar, "mean habit")?;
    check_xbar(xbar_t)?;
    let j = zbar.grid().node_index(t)?;
    let ws = single_class(cls, params, *zbar.grid())?;
    let cg = &ws.classes[0];
    let ch = ws.habit(cg, zbar.values());
    let bracket = (cg.k.a * (params.horizon - ws.t[j])).exp() * (xbar_t.powf(-cg.k.q) + ch.tail[j]);
    Ok(bracket.powf(1.0 - cls.risk))
}

/// Optimal risky fraction `π*` and consumption-to-wealth ratio `c*(t)`.
pub fn power_strategy(
    t: f64,
    cls: &AgentClass,
    params: &MarketParams,
    zbar: &GridPath,
    xbar_t: f64,
) -> Result<(f64, f64)> {
    check_zbar(params, zbar, "mean habit")?;
    check_xbar(xbar_t)?;
    let j = zbar.grid().node_index(t)?;
    let ws = single_class(cls, params, *zbar.grid())?;
    let cg = &ws.classes[0];
    let ch = ws.habit(cg, zbar.values());
    let c = ch.w[j] * cg.ea[j] / (xbar_t.powf(-cg.k.q) + ch.tail[j]);
    Ok((cg.k.pi_star, c))
}

/// `E[log X*_t | class]` at a grid node.
pub fn power_mean_log_wealth(
    t: f64,
    cls: &AgentClass,
    params: &MarketParams,
    zbar: &GridPath,
    xbar_t: f64,
) -> Result<f64> {
    check_zbar(params, zbar, "mean habit")?;
    check_xbar(xbar_t)?;
    let j = zbar.grid().node_index(t)?;
    let ws = single_class(cls, params, *zbar.grid())?;
    let cg = &ws.classes[0];
    let ch = ws.habit(cg, zbar.values());
    let cum = cumulative_trapezoid(&ws.consumption(cg, &ch, xbar_t), ws.grid.step());
    Ok(params.x0.ln() + cg.k.ell * ws.t[j] - cum[j])
}

/// Hat-space consumption factor, evaluated literally:
/// `(e^{a(T−t)}(X̄_T^{−pθ_T})^{1/(1−p)} + e^{−at}∫_t^T e^{as}e^{κs}Ẑ_s^γ ds)^{−1}`.
#[allow(non_snake_case)]
pub fn power_hat_G(t: f64, cls: &AgentClass, params: &MarketParams, zhat: &GridPath, xbar_t: f64) -> Result<f64> {
    check_zbar(params, zhat, "hat habit")?;
    check_xbar(xbar_t)?;
    cls.validate(Regime::Power, "class")?;
    let grid = zhat.grid();
    let j = grid.node_index(t)?;
    let k = ClassConsts::new(cls, params.delta);
    let integrand: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(zhat.values())
        .map(|(&s, &z)| (k.a * s).exp() * (k.kappa * s).exp() * z.powf(k.gamma))
        .collect();
    let tail = tail_trapezoid(&integrand, grid.step());
    let p = cls.risk;
    let first = (k.a * (params.horizon - t)).exp() * xbar_t.powf(-p * cls.theta_terminal()).powf(1.0 / (1.0 - p));
    Ok(1.0 / (first + (-k.a * t).exp() * tail[j]))
}

/// Mean wealth `x0·exp(rt − ∫_0^t e^{κs}Ẑ_s^γ Ĝ_s ds)` at a grid node.
pub fn power_hat_f(t: f64, cls: &AgentClass, params: &MarketParams, zhat: &GridPath, xbar_t: f64) -> Result<f64> {
    check_zbar(params, zhat, "hat habit")?;
    check_xbar(xbar_t)?;
    cls.validate(Regime::Power, "class")?;
    let grid = zhat.grid();
    let j = grid.node_index(t)?;
    let k = ClassConsts::new(cls, params.delta);
    let nodes = grid.nodes();
    let mut c = Vec::with_capacity(nodes.len());
    for (i, &s) in nodes.iter().enumerate() {
        c.push((k.kappa * s).exp() * zhat[i].powf(k.gamma) * power_hat_G(s, cls, params, zhat, xbar_t)?);
    }
    let cum = cumulative_trapezoid(&c, grid.step());
    Ok(params.x0 * (k.r * nodes[j] - cum[j]).exp())
}

/// A-priori bounds `C0, C1, C2`, the constant `E`, `M(t)` and `β_k`.
pub fn power_constants(dist: &TypeDistribution, params: &MarketParams, grid: TimeGrid) -> Result<PowerBounds> {
    params.validate(Regime::Power)?;
    dist.validate(Regime::Power)?;
    TimeGrid::new(grid.n_steps(), params.horizon)?.ensure_same(&grid)?;
    let ws = Workspace::new(dist, params, grid);
    bounds(&ws)
}

fn bounds(ws: &Workspace) -> Result<PowerBounds> {
    let params = &ws.params;
    let big_t = params.horizon;
    let (x0, z0, delta) = (params.x0, params.z0, params.delta);
    let c2 = ws.c2();
    let beta_k: Vec<f64> = ws.classes.iter().map(|c| delta + c.k.kappa).collect();

    let log_e = (delta * x0).ln()
        + ws.classes
            .iter()
            .zip(&beta_k)
            .map(|(c, b)| -c.k.a * big_t + c.k.gamma * z0.ln() + c.k.q * c2.ln() + (b + c.k.a + c.k.r) * big_t)
            .fold(f64::NEG_INFINITY, f64::max);
    let e_const = log_e.exp();
    let slope = e_const * ws.classes.len() as f64;
    let m_vals: Vec<f64> = ws.t.iter().map(|&t| (slope * t + z0).min(f64::MAX)).collect();
    let m_t = m_vals[m_vals.len() - 1];
    let m_path = GridPath::new(ws.grid, m_vals)?;

    // C1 from C1 = C2 exp(−Σ F_k D_k C1^{q_k})
    let d_k: Vec<f64> = ws
        .classes
        .iter()
        .map(|c| {
            let rate = c.k.kappa + c.k.a;
            let integral = if rate.abs() < 1e-300 { big_t } else { (rate * big_t).exp_m1() / rate };
            z0.powf(c.k.gamma) * (-c.k.a * big_t).exp() * integral
        })
        .collect();
    let lower = |x: f64| {
        let s: f64 = ws.classes.iter().zip(&d_k).map(|(c, d)| c.weight * d * x.powf(c.k.q)).sum();
        c2 * (-s).exp()
    };
    let c1 = if ws.classes.iter().all(|c| c.k.q == 0.0) {
        lower(1.0)
    } else {
        let f = |x: f64| x - lower(x);
        if f(c2) <= 0.0 {
            c2
        } else {
            bisect(f, c2 * 1e-300, c2, 0.0)?
        }
    };

    // C0 from the refined chain: X̄_T ≤ C2 and Ẑ ≤ M(T)
    let h = ws.grid.step();
    let mut spent = 0.0;
    for cg in &ws.classes {
        let k = &cg.k;
        let lifted: Vec<f64> =
            ws.t.iter().zip(&cg.ea).map(|(&t, ea)| ea * (k.kappa * t).exp() * m_t.powf(k.gamma)).collect();
        let tail = tail_trapezoid(&lifted, h);
        let xt = c2.powf(-k.q);
        let upper: Vec<f64> =
            (0..ws.t.len()).map(|j| z0.powf(k.gamma) * (k.kappa * ws.t[j]).exp() * cg.ea[j] / (xt + tail[j])).collect();
        spent += cg.weight * cumulative_trapezoid(&upper, h)[ws.t.len() - 1];
    }
    let c0 = c2 * (-spent).exp();
    if !(c0 > 0.0 && c1 > 0.0 && c0 <= c2 && c1 <= c2) {
        return Err(Error::domain("bounds out of order (C0, C1 must lie in (0, C2])", c0.min(c1)));
    }
    Ok(PowerBounds { c0, c1, c2, e_const, m_path, beta_k })
}

/// Root `X̄_T` of the terminal-wealth equation for a fixed hat habit path.
pub fn power_xbar_given_zhat(zhat: &GridPath, dist: &TypeDistribution, params: &MarketParams, tol: f64) -> Result<f64> {
    check_zbar(params, zhat, "hat habit")?;
    dist.validate(Regime::Power)?;
    if let Some(&v) = zhat.values().iter().find(|&&v| v < params.z0) {
        return Err(Error::domain("hat habit must be >= z0", v));
    }
    let ws = Workspace::new(dist, params, *zhat.grid());
    let b = bounds(&ws)?;
    let zbar: Vec<f64> = zhat.values().iter().zip(&ws.decay).map(|(z, d)| z * d).collect();
    let habits = ws.habits(&zbar);
    ws.solve_xbar(&habits, 0.5 * b.c0.min(b.c1), tol)
}

pub fn solve_power_mfe(
    dist: &TypeDistribution,
    params: &MarketParams,
    grid: TimeGrid,
    tol: f64,
    max_iter: usize,
    damping: f64,
) -> Result<PowerEquilibrium> {
    solve_power_mfe_with(
        dist,
        params,
        grid,
        &PowerSolverOptions { tol, max_iter, damping, initial: InitialHabit::Floor },
    )
}

/// Damped, box-projected Picard iteration on `Ẑ` with an exact inner root for `X̄_T`.
pub fn solve_power_mfe_with(
    dist: &TypeDistribution,
    params: &MarketParams,
    grid: TimeGrid,
    opts: &PowerSolverOptions,
) -> Result<PowerEquilibrium> {
    params.validate(Regime::Power)?;
    dist.validate(Regime::Power)?;
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("solver.tol", format!("must be > 0, got {}", opts.tol)));
    }
    if opts.max_iter == 0 {
        return Err(Error::invalid("solver.max_iter", "must be >= 1"));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::invalid("solver.damping", format!("must lie in (0,1], got {}", opts.damping)));
    }
    TimeGrid::new(grid.n_steps(), params.horizon)?.ensure_same(&grid)?;
    let ws = Workspace::new(dist, params, grid);
    let b = bounds(&ws)?;
    let lo = 0.5 * b.c0.min(b.c1);
    let m = b.m_path.values();
    let root_tol = 0.0;
    let lam = opts.damping;

    let mut zhat: Vec<f64> = match opts.initial {
        InitialHabit::Floor => vec![params.z0; grid.n_nodes()],
        InitialHabit::Ceiling => m.to_vec(),
    };
    let unhat = |zh: &[f64]| -> Vec<f64> { zh.iter().zip(&ws.decay).map(|(z, d)| z * d).collect() };

    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let habits = ws.habits(&unhat(&zhat));
        let xbar = ws.solve_xbar(&habits, lo, root_tol)?;
        let phi = ws.phi_hat(&habits, xbar);
        let next: Vec<f64> =
            (0..zhat.len()).map(|j| ((1.0 - lam) * zhat[j] + lam * phi[j]).clamp(params.z0, m[j])).collect();
        change = sup_abs_diff(&next, &zhat);
        zhat = next;
        iterations += 1;
        if !(change >= opts.tol) {
            break;
        }
    }
    if !(change < opts.tol) {
        return Err(Error::NonConvergence { iterations, residual: change });
    }

    let zbar = unhat(&zhat);
    let habits = ws.habits(&zbar);
    let xbar_t = ws.solve_xbar(&habits, lo, root_tol)?;
    check_monotone_rhs(&ws, &habits, lo, b.c2)?;

    // audit in the original variables: habit integral form and terminal-wealth equation
    let phi = ws.phi_hat(&habits, xbar_t);
    let habit_gap = zbar.iter().zip(&phi).zip(&ws.decay).map(|((z, ph), d)| (z - d * ph).abs()).fold(0.0, f64::max);
    let log_mean: f64 = ws
        .classes
        .iter()
        .zip(&habits)
        .map(|(cg, ch)| cg.weight * (cg.k.ell * params.horizon - ws.total_consumption(cg, ch, xbar_t)))
        .sum();
    let xbar_gap = (xbar_t - params.x0 * log_mean.exp()).abs();
    let residual = habit_gap + xbar_gap;
    if !(residual < 10.0 * opts.tol) {
        return Err(Error::AuditFailed { residual, limit: 10.0 * opts.tol });
    }

    Ok(PowerEquilibrium {
        zbar: GridPath::new(grid, zbar)?,
        zhat: GridPath::new(grid, zhat)?,
        xbar_t,
        residual,
        iterations,
        bounds: b,
    })
}

fn check_monotone_rhs(ws: &Workspace, habits: &[ClassHabit], lo: f64, hi: f64) -> Result<()> {
    let probes = 16;
    let mut prev = f64::INFINITY;
    for i in 0..=probes {
        let x = lo + (hi - lo) * i as f64 / probes as f64;
        let v = ws.xbar_rhs(habits, x);
        if v > prev {
            return Err(Error::domain("terminal-wealth map is not decreasing at", x));
        }
        prev = v;
    }
    Ok(())
}

impl PowerEquilibrium {
    pub fn grid(&self) -> &TimeGrid {
        self.zbar.grid()
    }

    pub fn class_paths(&self, cls: &AgentClass, params: &MarketParams) -> PowerClassPaths {
        let ws = Workspace::new(&TypeDistribution::single(*cls), params, *self.grid());
        let cg = &ws.classes[0];
        let ch = ws.habit(cg, self.zbar.values());
        let c_star = ws.consumption(cg, &ch, self.xbar_t);
        let cum = cumulative_trapezoid(&c_star, ws.grid.step());
        let log_drift: Vec<f64> = ws.t.iter().zip(&cum).map(|(t, c)| cg.k.ell * t - c).collect();
        let mean_wealth = ws.t.iter().zip(&cum).map(|(t, c)| params.x0 * (cg.k.r * t - c).exp()).collect();
        PowerClassPaths { pi_star: cg.k.pi_star, vol: cg.k.vol, c_star, log_drift, mean_wealth }
    }
}
