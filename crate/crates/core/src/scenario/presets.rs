//! Baked-in sensitivity scenarios.
//!
//! Shared constants: `T = 1`, `δ = 0.1`, `μ = σ = 0.2`, `θ = 1` unless a
//! preset overrides them. The exponential analogue of a preset uses the
//! same numbers with the power exponent reinterpreted as the risk
//! tolerance β.

use super::config::{GridConfig, ScenarioConfig, SimulationConfig, SolverConfig, SweepConfig, SweepParameter};
use crate::error::{Error, Result};
use crate::model::{AgentClass, MarketParams, Regime, TypeDistribution};

pub const PRESET_NAMES: [&str; 9] = [
    "fig1-low",
    "fig1-high",
    "fig2-low",
    "fig2-high",
    "fig3-low",
    "fig3-high",
    "fig4-hetero",
    "fig5-highwealth",
    "fig5-lowwealth",
];

fn base(p: f64, x0: f64, z0: f64, sweep: Option<(SweepParameter, Vec<f64>)>) -> ScenarioConfig {
    ScenarioConfig {
        regime: Regime::Power,
        market: MarketParams { horizon: 1.0, delta: 0.1, x0, z0 },
        distribution: TypeDistribution::single(AgentClass::new(0.2, 0.2, p, 1.0)),
        grid: GridConfig::default(),
        solver: SolverConfig::default(),
        simulation: SimulationConfig::default(),
        sweep: sweep.map(|(parameter, values)| SweepConfig { parameter, values }),
        outputs: None,
    }
}

/// Power-regime preset by name.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    use SweepParameter::*;
    let cfg = match name {
        "fig1-low" => base(0.2, 5.0, 1.0, Some((Risk, vec![0.2, 0.3, 0.5]))),
        "fig1-high" => base(0.2, 5.0, 10.0, Some((Risk, vec![0.2, 0.3, 0.5, 0.8]))),
        "fig2-low" => base(0.3, 5.0, 1.0, Some((Delta, vec![0.1, 0.3, 0.5]))),
        "fig2-high" => base(0.8, 8.0, 10.0, Some((Delta, vec![0.1, 0.3, 0.5]))),
        "fig3-low" => base(0.3, 5.0, 1.0, Some((Theta, vec![0.5, 0.8, 1.0]))),
        "fig3-high" => base(0.3, 5.0, 10.0, Some((Theta, vec![0.5, 0.8, 1.0]))),
        "fig4-hetero" => {
            let mut c = base(0.2, 5.0, 1.0, None);
            c.distribution = TypeDistribution {
                classes: vec![AgentClass::new(0.2, 0.2, 0.2, 1.0), AgentClass::new(0.4, 0.2, 0.5, 1.0)],
                weights: vec![0.7, 0.3],
            };
            c
        }
        // with (θ_T = 1) and without (θ_T = 0) relative wealth concerns
        "fig5-highwealth" => base(0.5, 10.0, 5.0, Some((TerminalTheta, vec![1.0, 0.0]))),
        "fig5-lowwealth" => base(0.5, 1.0, 5.0, Some((TerminalTheta, vec![1.0, 0.0]))),
        other => {
            return Err(Error::invalid(
                "preset",
                format!("unknown preset `{other}`; expected one of {}", PRESET_NAMES.join(", ")),
            ))
        }
    };
    Ok(cfg)
}

/// Preset in the requested regime; the exponential analogue maps p to β.
pub fn preset_for(name: &str, regime: Regime) -> Result<ScenarioConfig> {
    let mut cfg = preset(name)?;
    if regime == Regime::Exponential {
        if matches!(&cfg.sweep, Some(s) if s.parameter == SweepParameter::TerminalTheta) {
            return Err(Error::invalid(
                "regime",
                format!("preset `{name}` varies the terminal competition weight, which only the power regime supports"),
            ));
        }
        cfg.regime = Regime::Exponential;
    }
    Ok(cfg)
}
