//! n-agent simulation under the candidate strategies built from a
//! mean-field equilibrium, and the statistics that compare the two.
//!
//! Wealth paths use the explicit solutions of the wealth equations, so
//! the only time-discretization error left is the trapezoid quadrature of
//! the habit integrals.

mod assign;
mod nash;
mod objective;
mod study;

pub use assign::{assign_classes, ClassAssignment};
pub use nash::{default_deviation_family, nash_gap_probe, Deviation, DeviationGain, GapEstimate};
pub use objective::{estimate_objective, path_objective, BenchmarkChoice, ObjectiveEstimate};
pub use study::{convergence_study, fit_log_log, LogLogFit, SimReport};

use crate::error::{Error, Result};
use crate::exp_mfg::{ExpClassPaths, ExpEquilibrium};
use crate::model::{MarketParams, Regime, TypeDistribution};
use crate::numerics::{habit_from_rate, GridPath, TimeGrid};
use crate::power_mfg::{PowerClassPaths, PowerEquilibrium};
use crate::rng::NoiseSource;

/// A solved mean-field equilibrium of either regime.
#[derive(Debug, Clone)]
pub enum Equilibrium {
    Exponential(ExpEquilibrium),
    Power(PowerEquilibrium),
}

impl Equilibrium {
    pub fn regime(&self) -> Regime {
        match self {
            Equilibrium::Exponential(_) => Regime::Exponential,
            Equilibrium::Power(_) => Regime::Power,
        }
    }

    pub fn zbar(&self) -> &GridPath {
        match self {
            Equilibrium::Exponential(e) => &e.zbar,
            Equilibrium::Power(e) => &e.zbar,
        }
    }

    pub fn xbar_t(&self) -> f64 {
        match self {
            Equilibrium::Exponential(e) => e.xbar_t,
            Equilibrium::Power(e) => e.xbar_t,
        }
    }

    pub fn residual(&self) -> f64 {
        match self {
            Equilibrium::Exponential(e) => e.residual,
            Equilibrium::Power(e) => e.residual,
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            Equilibrium::Exponential(e) => e.iterations,
            Equilibrium::Power(e) => e.iterations,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        self.zbar().grid()
    }
}

#[derive(Debug, Clone)]
enum ClassModels {
    Exp(Vec<ExpClassPaths>),
    Power(Vec<PowerClassPaths>),
}

/// Everything needed to simulate agents playing the candidate strategies.
#[derive(Debug, Clone)]
pub struct CandidateModel {
    params: MarketParams,
    dist: TypeDistribution,
    grid: TimeGrid,
    zbar: Vec<f64>,
    xbar_t: f64,
    classes: ClassModels,
}

/// Result of one simulated cohort.
#[derive(Debug, Clone)]
pub struct CohortOutcome {
    pub zbar_n: GridPath,
    /// Arithmetic mean (exponential) or geometric mean (power) of terminal wealth.
    pub xbar_n_t: f64,
    pub paths: Option<Vec<AgentPath>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentPath {
    pub class: usize,
    pub wealth: Vec<f64>,
    /// Consumption rate in currency per unit time (`C` or `c·X`).
    pub consumption: Vec<f64>,
}

impl AgentPath {
    /// Own habit `e^{−δt}(z0 + ∫δe^{δs}C_s ds)`.
    pub fn habit(&self, params: &MarketParams, grid: &TimeGrid) -> Vec<f64> {
        habit_from_rate(&self.consumption, params.delta, params.z0, grid)
    }
}

impl CandidateModel {
    pub fn new(eq: &Equilibrium, dist: &TypeDistribution, params: &MarketParams) -> Result<Self> {
        let regime = eq.regime();
        params.validate(regime)?;
        dist.validate(regime)?;
        let grid = *eq.grid();
        if grid.horizon() != params.horizon {
            return Err(Error::GridMismatch {
                expected: grid.n_steps(),
                expected_horizon: params.horizon,
                found: grid.n_steps(),
                found_horizon: grid.horizon(),
            });
        }
        let classes = match eq {
            Equilibrium::Exponential(e) => {
                ClassModels::Exp(dist.classes.iter().map(|c| e.class_paths(c, params)).collect())
            }
            Equilibrium::Power(e) => {
                ClassModels::Power(dist.classes.iter().map(|c| e.class_paths(c, params)).collect())
            }
        };
        Ok(Self {
            params: *params,
            dist: dist.clone(),
            grid,
            zbar: eq.zbar().values().to_vec(),
            xbar_t: eq.xbar_t(),
            classes,
        })
    }

    pub fn regime(&self) -> Regime {
        match self.classes {
            ClassModels::Exp(_) => Regime::Exponential,
            ClassModels::Power(_) => Regime::Power,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    pub fn dist(&self) -> &TypeDistribution {
        &self.dist
    }

    pub fn zbar(&self) -> &[f64] {
        &self.zbar
    }

    pub fn xbar_t(&self) -> f64 {
        self.xbar_t
    }

    fn check_assignment(&self, a: &ClassAssignment) -> Result<()> {
        if a.labels.is_empty() {
            return Err(Error::invalid("simulation.n", "cohort must have at least one agent"));
        }
        if let Some(&bad) = a.labels.iter().find(|&&l| l >= self.dist.len()) {
            return Err(Error::invalid("assignment.labels", format!("class {bad} does not exist")));
        }
        Ok(())
    }

    /// Brownian path on the grid from standard normal increments.
    fn brownian(&self, xi: &[f64], out: &mut [f64]) {
        let sq = self.grid.step().sqrt();
        out[0] = 0.0;
        for j in 0..xi.len() {
            out[j + 1] = out[j] + sq * xi[j];
        }
    }

    /// Candidate wealth and consumption rate for one agent.
    pub fn agent_path(&self, class: usize, xi: &[f64]) -> AgentPath {
        let n = self.grid.n_nodes();
        let mut w = vec![0.0; n];
        self.brownian(xi, &mut w);
        let mut wealth = vec![0.0; n];
        let mut consumption = vec![0.0; n];
        match &self.classes {
            ClassModels::Exp(cp) => {
                let c = &cp[class];
                for j in 0..n {
                    let x = c.mean_wealth[j] + c.vol[j] * w[j];
                    wealth[j] = x;
                    consumption[j] = x / c.time_to_go[j] + c.intercept[j];
                }
            }
            ClassModels::Power(cp) => {
                let c = &cp[class];
                let lx0 = self.params.x0.ln();
                for j in 0..n {
                    let x = (lx0 + c.log_drift[j] + c.vol * w[j]).exp();
                    wealth[j] = x;
                    consumption[j] = c.c_star[j] * x;
                }
            }
        }
        AgentPath { class, wealth, consumption }
    }

    /// Terminal statistic that averages into the wealth benchmark:
    /// `X_T` (exponential) or `log X_T` (power).
    fn terminal_stat(&self, x_t: f64) -> f64 {
        match self.classes {
            ClassModels::Exp(_) => x_t,
            ClassModels::Power(_) => x_t.ln(),
        }
    }

    fn benchmark_from_stat(&self, mean_stat: f64) -> f64 {
        match self.classes {
            ClassModels::Exp(_) => mean_stat,
            ClassModels::Power(_) => mean_stat.exp(),
        }
    }

    /// Empirical `(Z̄ⁿ, X̄ⁿ_T)` from summed consumption rates and terminal statistics.
    fn empirical_benchmark(&self, rate_sum: &[f64], stat_sum: f64, n: usize) -> (Vec<f64>, f64) {
        let inv = 1.0 / n as f64;
        let mean_rate: Vec<f64> = rate_sum.iter().map(|s| s * inv).collect();
        (
            habit_from_rate(&mean_rate, self.params.delta, self.params.z0, &self.grid),
            self.benchmark_from_stat(stat_sum * inv),
        )
    }

    /// Sum of consumption rates and terminal statistics over agents `skip..n`.
    fn accumulate(
        &self,
        a: &ClassAssignment,
        noise: &dyn NoiseSource,
        replication: u64,
        skip: usize,
        keep: bool,
    ) -> (Vec<f64>, f64, Vec<AgentPath>) {
        let mut rate_sum = vec![0.0; self.grid.n_nodes()];
        let mut stat_sum = 0.0;
        let mut xi = vec![0.0; self.grid.n_steps()];
        let mut kept = Vec::new();
        for (i, &class) in a.labels.iter().enumerate().skip(skip) {
            noise.fill(replication, i as u64, &mut xi);
            let path = self.agent_path(class, &xi);
            for (s, c) in rate_sum.iter_mut().zip(&path.consumption) {
                *s += c;
            }
            stat_sum += self.terminal_stat(path.wealth[path.wealth.len() - 1]);
            if keep {
                kept.push(path);
            }
        }
        (rate_sum, stat_sum, kept)
    }

    /// Simulate one cohort of candidate players.
    pub fn simulate(
        &self,
        a: &ClassAssignment,
        noise: &dyn NoiseSource,
        replication: u64,
        keep_paths: bool,
    ) -> Result<CohortOutcome> {
        self.check_assignment(a)?;
        let (rate_sum, stat_sum, kept) = self.accumulate(a, noise, replication, 0, keep_paths);
        let (z, x) = self.empirical_benchmark(&rate_sum, stat_sum, a.n_agents());
        Ok(CohortOutcome { zbar_n: GridPath::new(self.grid, z)?, xbar_n_t: x, paths: keep_paths.then_some(kept) })
    }
}

/// One exponential-regime cohort; see [`CandidateModel::simulate`].
#[allow(clippy::too_many_arguments)]
pub fn simulate_exp_cohort(
    assignment: &ClassAssignment,
    eq: &ExpEquilibrium,
    dist: &TypeDistribution,
    params: &MarketParams,
    grid: &TimeGrid,
    noise: &dyn NoiseSource,
    replication: u64,
    keep_paths: bool,
) -> Result<CohortOutcome> {
    eq.grid().ensure_same(grid)?;
    CandidateModel::new(&Equilibrium::Exponential(eq.clone()), dist, params)?.simulate(
        assignment,
        noise,
        replication,
        keep_paths,
    )
}

/// One power-regime cohort; see [`CandidateModel::simulate`].
#[allow(clippy::too_many_arguments)]
pub fn simulate_power_cohort(
    assignment: &ClassAssignment,
    eq: &PowerEquilibrium,
    dist: &TypeDistribution,
    params: &MarketParams,
    grid: &TimeGrid,
    noise: &dyn NoiseSource,
    replication: u64,
    keep_paths: bool,
) -> Result<CohortOutcome> {
    eq.grid().ensure_same(grid)?;
    CandidateModel::new(&Equilibrium::Power(eq.clone()), dist, params)?.simulate(
        assignment,
        noise,
        replication,
        keep_paths,
    )
}
