use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MarketParams, Regime, TypeDistribution};
use crate::numerics::TimeGrid;
use crate::power_mfg::InitialHabit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub regime: Regime,
    pub market: MarketParams,
    pub distribution: TypeDistribution,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_steps: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default)]
    pub initial: InitialHabit,
}

fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    10_000
}
fn default_damping() -> f64 {
    0.5
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
            damping: default_damping(),
            initial: InitialHabit::Floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_n_values")]
    pub n_values: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Replications for the deviation probe; 0 skips the probe.
    #[serde(default = "default_replications")]
    pub probe_replications: usize,
}

fn default_n_values() -> Vec<usize> {
    vec![16, 64, 256, 1024, 4096]
}
fn default_replications() -> usize {
    64
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_values: default_n_values(),
            replications: default_replications(),
            seed: 0,
            probe_replications: default_replications(),
        }
    }
}

/// Parameter varied by a sensitivity sweep; applied to every class where
/// the parameter is per class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    #[serde(alias = "p", alias = "beta")]
    Risk,
    Delta,
    Theta,
    TerminalTheta,
    Z0,
    X0,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::Risk => "risk",
            SweepParameter::Delta => "delta",
            SweepParameter::Theta => "theta",
            SweepParameter::TerminalTheta => "terminal_theta",
            SweepParameter::Z0 => "z0",
            SweepParameter::X0 => "x0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.grid.n_steps, self.market.horizon)
    }

    /// Checks every field before any computation.
    pub fn validate(&self) -> Result<()> {
        self.market.validate(self.regime)?;
        self.distribution.validate(self.regime)?;
        if self.grid.n_steps < 2 {
            return Err(Error::invalid("grid.n_steps", format!("need at least 2, got {}", self.grid.n_steps)));
        }
        let s = &self.solver;
        if !(s.tol.is_finite() && s.tol > 0.0) {
            return Err(Error::invalid("solver.tol", format!("must be > 0, got {}", s.tol)));
        }
        if s.max_iter == 0 {
            return Err(Error::invalid("solver.max_iter", "must be >= 1"));
        }
        if !(s.damping > 0.0 && s.damping <= 1.0) {
            return Err(Error::invalid("solver.damping", format!("must lie in (0,1], got {}", s.damping)));
        }
        let sim = &self.simulation;
        if sim.n_values.len() < 3 || sim.n_values.windows(2).any(|w| w[0] >= w[1]) || sim.n_values[0] == 0 {
            return Err(Error::invalid(
                "simulation.n_values",
                "need at least 3 strictly increasing positive cohort sizes",
            ));
        }
        if sim.replications < 30 {
            return Err(Error::invalid(
                "simulation.replications",
                format!("need at least 30, got {}", sim.replications),
            ));
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return Err(Error::invalid("sweep.values", "must not be empty"));
            }
            for (i, &v) in sw.values.iter().enumerate() {
                let leg = self.with_value(sw.parameter, v);
                leg.market.validate(self.regime).map_err(|e| rename(e, i))?;
                leg.distribution.validate(self.regime).map_err(|e| rename(e, i))?;
            }
        }
        Ok(())
    }

    /// Copy of the config with one parameter overridden and no sweep.
    pub fn with_value(&self, parameter: SweepParameter, value: f64) -> ScenarioConfig {
        let mut c = self.clone();
        c.sweep = None;
        match parameter {
            SweepParameter::Delta => c.market.delta = value,
            SweepParameter::Z0 => c.market.z0 = value,
            SweepParameter::X0 => c.market.x0 = value,
            SweepParameter::Risk => c.distribution.classes.iter_mut().for_each(|k| k.risk = value),
            SweepParameter::Theta => c.distribution.classes.iter_mut().for_each(|k| {
                k.theta = value;
            }),
            SweepParameter::TerminalTheta => {
                c.distribution.classes.iter_mut().for_each(|k| k.terminal_theta = Some(value))
            }
        }
        c
    }
}

fn rename(e: Error, leg: usize) -> Error {
    match e {
        Error::InvalidParameter { field, reason } => {
            Error::InvalidParameter { field: format!("sweep.values[{leg}] -> {field}"), reason }
        }
        other => other,
    }
}
