//! Configuration, presets and artifact-writing runners.

mod config;
mod output;
mod presets;
mod run;

pub use config::{GridConfig, ScenarioConfig, SimulationConfig, SolverConfig, SweepConfig, SweepParameter};
pub use output::{equilibrium_header, equilibrium_table, fmt_num, write_json, write_text, ErrorReport, Table};
pub use presets::{preset, preset_for, PRESET_NAMES};
pub use run::{
    leg_directory, run_convergence, run_preset, run_sensitivity, run_solve, solve, write_error, BoundsSummary,
    ConvergenceSummary, FitSummary, GapSummary, LegStatus, PresetOutcome, RunMetadata, SolveSummary, SweepLeg,
    SweepSummary,
};
