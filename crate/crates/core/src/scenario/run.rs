//! Scenario runners: solve, simulate and sweep, writing artifacts to a directory.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ScenarioConfig, SweepParameter};
use super::output::{equilibrium_table, fmt_num, write_json, write_text, ErrorReport, Table};
use crate::error::{Error, Result};
use crate::exp_mfg::solve_exp_mfe;
use crate::model::Regime;
use crate::power_mfg::{solve_power_mfe_with, PowerSolverOptions};
use crate::rng::CounterNoise;
use crate::sim::{
    assign_classes, convergence_study, default_deviation_family, nash_gap_probe, CandidateModel, Deviation,
    Equilibrium, LogLogFit,
};

const TERMINAL_OVERRIDE_NOTE: &str = "terminal_theta differs from theta for at least one class: the terminal \
     competition weight is overridden to emulate a benchmark without relative wealth concerns";

/// Validates the config and solves its equilibrium.
pub fn solve(config: &ScenarioConfig) -> Result<Equilibrium> {
    config.validate()?;
    let grid = config.time_grid()?;
    let s = &config.solver;
    match config.regime {
        Regime::Exponential => {
            solve_exp_mfe(&config.distribution, &config.market, grid, s.tol, s.max_iter).map(Equilibrium::Exponential)
        }
        Regime::Power => {
            let opts = PowerSolverOptions { tol: s.tol, max_iter: s.max_iter, damping: s.damping, initial: s.initial };
            solve_power_mfe_with(&config.distribution, &config.market, grid, &opts).map(Equilibrium::Power)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsSummary {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub e_const: f64,
    #[serde(rename = "M_T")]
    pub m_t: f64,
    pub beta_k: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub terminal_theta_override: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub config: ScenarioConfig,
}

impl RunMetadata {
    fn new(config: &ScenarioConfig) -> Self {
        let over = config.distribution.has_terminal_override();
        let mut config = config.clone();
        config.outputs = None;
        Self { terminal_theta_override: over, note: over.then(|| TERMINAL_OVERRIDE_NOTE.to_string()), config }
    }
}

/// Contents of `summary.json` for a single solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub regime: Regime,
    #[serde(rename = "xbar_T")]
    pub xbar_t: f64,
    #[serde(rename = "zbar_T")]
    pub zbar_t: f64,
    pub residual: f64,
    pub iterations: usize,
    pub n_steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsSummary>,
    pub metadata: RunMetadata,
}

impl SolveSummary {
    pub fn new(eq: &Equilibrium, config: &ScenarioConfig) -> Self {
        let bounds = match eq {
            Equilibrium::Power(p) => Some(BoundsSummary {
                c0: p.bounds.c0,
                c1: p.bounds.c1,
                c2: p.bounds.c2,
                e_const: p.bounds.e_const,
                m_t: p.bounds.m_path.last(),
                beta_k: p.bounds.beta_k.clone(),
            }),
            Equilibrium::Exponential(_) => None,
        };
        Self {
            regime: eq.regime(),
            xbar_t: eq.xbar_t(),
            zbar_t: eq.zbar().last(),
            residual: eq.residual(),
            iterations: eq.iterations(),
            n_steps: eq.grid().n_steps(),
            bounds,
            metadata: RunMetadata::new(config),
        }
    }
}

fn write_solve(eq: &Equilibrium, config: &ScenarioConfig, out: &Path) -> Result<(Table, SolveSummary)> {
    let table = equilibrium_table(eq, &config.distribution, &config.market)?;
    let summary = SolveSummary::new(eq, config);
    write_text(&out.join("equilibrium.csv"), &table.to_csv())?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok((table, summary))
}

/// Writes `equilibrium.csv` and `summary.json`.
pub fn run_solve(config: &ScenarioConfig, out: &Path) -> Result<SolveSummary> {
    let eq = solve(config)?;
    write_solve(&eq, config, out).map(|(_, s)| s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
}

impl From<LogLogFit> for FitSummary {
    fn from(f: LogLogFit) -> Self {
        Self { slope: f.slope, slope_stderr: f.slope_stderr, intercept: f.intercept }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSummary {
    pub n: usize,
    pub max_gain: f64,
    pub best_deviation: Deviation,
    pub benchmark_error: f64,
    pub candidate_benchmark_gap: f64,
    pub domain_errors: usize,
}

/// Contents of `summary.json` for a convergence run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceSummary {
    pub regime: Regime,
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub sup_z_mse: Option<FitSummary>,
    pub x_mse: Option<FitSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_gamma_mse: Option<FitSummary>,
    pub exact_match: bool,
    pub gaps: Vec<GapSummary>,
    pub equilibrium: SolveSummary,
}

/// Writes `convergence.csv` (one row per cohort size) and `summary.json`.
pub fn run_convergence(config: &ScenarioConfig, out: &Path) -> Result<ConvergenceSummary> {
    let eq = solve(config)?;
    let sim = &config.simulation;
    let model = CandidateModel::new(&eq, &config.distribution, &config.market)?;
    let noise = CounterNoise::new(sim.seed);
    let report = convergence_study(&model, &sim.n_values, sim.replications, &noise)?;

    let family = default_deviation_family();
    let mut gaps = Vec::new();
    if sim.probe_replications > 0 {
        for &n in &sim.n_values {
            let a = assign_classes(n, &config.distribution);
            let g = nash_gap_probe(&model, &a, &family, sim.probe_replications, &noise)?;
            gaps.push(GapSummary {
                n,
                max_gain: g.max_gain,
                best_deviation: g.best_deviation,
                benchmark_error: g.benchmark_error,
                candidate_benchmark_gap: g.candidate_benchmark_gap,
                domain_errors: g.domain_errors,
            });
        }
    }

    let power = report.x_gamma_mse.is_some();
    let mut header: Vec<String> = ["n", "sup_z_mse", "x_mse"].iter().map(|s| s.to_string()).collect();
    if power {
        header.push("x_gamma_mse".into());
    }
    if !gaps.is_empty() {
        header.push("gap".into());
        header.push("gap_benchmark_error".into());
    }
    header.push("epsilon_n".into());
    let mut table = Table::new(header);
    for (i, &n) in sim.n_values.iter().enumerate() {
        let mut row = vec![n as f64, report.sup_z_mse[i], report.x_mse[i]];
        if let Some(g) = &report.x_gamma_mse {
            row.push(g[i]);
        }
        if let Some(g) = gaps.get(i) {
            row.push(g.max_gain);
            row.push(g.benchmark_error);
        }
        row.push(assign_classes(n, &config.distribution).epsilon_n);
        table.push(row)?;
    }

    let summary = ConvergenceSummary {
        regime: report.regime,
        n_values: report.n_values.clone(),
        replications: report.replications,
        seed: sim.seed,
        sup_z_mse: report.z_fit.map(FitSummary::from),
        x_mse: report.x_fit.map(FitSummary::from),
        x_gamma_mse: report.x_gamma_fit.map(FitSummary::from),
        exact_match: report.exact_match,
        gaps,
        equilibrium: SolveSummary::new(&eq, config),
    };
    write_text(&out.join("convergence.csv"), &table.to_csv())?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LegStatus {
    Ok {
        #[serde(rename = "xbar_T")]
        xbar_t: f64,
        residual: f64,
        iterations: usize,
        directory: String,
    },
    Failed {
        #[serde(flatten)]
        error: ErrorReport,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepLeg {
    pub value: f64,
    #[serde(flatten)]
    pub status: LegStatus,
}

/// Contents of `summary.json` for a sweep; also the partial-results manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub regime: Regime,
    pub parameter: SweepParameter,
    pub complete: bool,
    pub legs: Vec<SweepLeg>,
    pub metadata: RunMetadata,
}

/// Directory name of one sweep leg, e.g. `delta_0.3`.
pub fn leg_directory(parameter: SweepParameter, value: f64) -> String {
    format!("{}_{}", parameter.name(), fmt_num(value))
}

/// Re-solves once per sweep value. Writes each leg's equilibrium artifacts to
/// its own subdirectory, a stacked `sweep.csv` and `summary.json`. Failed legs
/// are recorded in the summary and the first failure is returned.
pub fn run_sensitivity(config: &ScenarioConfig, out: &Path) -> Result<SweepSummary> {
    config.validate()?;
    let sweep =
        config.sweep.as_ref().ok_or_else(|| Error::invalid("sweep", "a sweep needs a parameter and a value list"))?;
    if sweep.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("sweep.values", "values must be finite"));
    }
    let legs: Vec<(f64, ScenarioConfig)> =
        sweep.values.iter().map(|&v| (v, config.with_value(sweep.parameter, v))).collect();
    let solved: Vec<Result<Equilibrium>> = legs.par_iter().map(|(_, c)| solve(c)).collect();

    let mut stacked: Option<Table> = None;
    let mut records = Vec::with_capacity(legs.len());
    let mut first_error = None;
    for ((value, leg_cfg), eq) in legs.iter().zip(solved) {
        let result = eq.and_then(|eq| {
            let dir = leg_directory(sweep.parameter, *value);
            let (table, summary) = write_solve(&eq, leg_cfg, &out.join(&dir))?;
            Ok((table, summary, dir))
        });
        match result {
            Ok((table, summary, directory)) => {
                let st = stacked.get_or_insert_with(|| {
                    let mut h = vec!["sweep_value".to_string()];
                    h.extend(table.header.iter().cloned());
                    h.push("xbar_T".into());
                    Table::new(h)
                });
                for row in &table.rows {
                    let mut r = Vec::with_capacity(row.len() + 2);
                    r.push(*value);
                    r.extend_from_slice(row);
                    r.push(summary.xbar_t);
                    st.push(r)?;
                }
                records.push(SweepLeg {
                    value: *value,
                    status: LegStatus::Ok {
                        xbar_t: summary.xbar_t,
                        residual: summary.residual,
                        iterations: summary.iterations,
                        directory,
                    },
                });
            }
            Err(e) => {
                records.push(SweepLeg { value: *value, status: LegStatus::Failed { error: ErrorReport::from(&e) } });
                first_error.get_or_insert(e);
            }
        }
    }

    if let Some(t) = &stacked {
        write_text(&out.join("sweep.csv"), &t.to_csv())?;
    }
    let summary = SweepSummary {
        regime: config.regime,
        parameter: sweep.parameter,
        complete: first_error.is_none(),
        legs: records,
        metadata: RunMetadata::new(config),
    };
    write_json(&out.join("summary.json"), &summary)?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

/// What a preset run produced.
#[derive(Debug, Clone, PartialEq)]
pub enum PresetOutcome {
    Single(SolveSummary),
    Sweep(SweepSummary),
}

/// Runs a preset: a sweep when the preset defines one, otherwise a single solve.
pub fn run_preset(config: &ScenarioConfig, out: &Path) -> Result<PresetOutcome> {
    if config.sweep.is_some() {
        run_sensitivity(config, out).map(PresetOutcome::Sweep)
    } else {
        run_solve(config, out).map(PresetOutcome::Single)
    }
}

/// Writes `error.json` describing `err`.
pub fn write_error(out: &Path, err: &Error) -> Result<()> {
    write_json(&out.join("error.json"), &ErrorReport::from(err))
}
