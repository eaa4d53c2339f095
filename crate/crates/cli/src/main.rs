use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mfg_habitat::scenario::{
    preset_for, run_convergence, run_preset, run_sensitivity, run_solve, write_error, ScenarioConfig,
};
use mfg_habitat::{Error, Regime, Result};

const THREADS_ENV: &str = "MFG_HABITAT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "mfg-habitat", version, about = "Mean-field habit-formation games: solve, simulate, sweep")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario config (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the config's `outputs` or `./out`
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override `simulation.seed`
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override `grid.n_steps`
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Worker threads; falls back to MFG_HABITAT_THREADS, then all cores
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the equilibrium and write equilibrium.csv and summary.json
    Solve,
    /// Run the finite-population study and write convergence.csv
    Converge,
    /// Re-solve across the config's sweep values and write sweep.csv
    Sweep,
    /// Run a baked-in scenario by name
    Preset {
        name: String,
        #[arg(long, value_enum, default_value_t = RegimeArg::Power)]
        regime: RegimeArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegimeArg {
    Power,
    Exponential,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Power => Regime::Power,
            RegimeArg::Exponential => Regime::Exponential,
        }
    }
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = match (&cli.command, &cli.config) {
        (Command::Preset { name, regime }, _) => preset_for(name, (*regime).into())?,
        (_, Some(path)) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str::<ScenarioConfig>(&text)?
        }
        (_, None) => return Err(Error::invalid("config", "--config is required for this subcommand")),
    };
    if let Some(seed) = cli.seed {
        cfg.simulation.seed = seed;
    }
    if let Some(n) = cli.grid {
        cfg.grid.n_steps = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn thread_count(cli: &Cli) -> Result<Option<usize>> {
    if let Some(n) = cli.threads {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::invalid(THREADS_ENV, format!("expected a non-negative integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: &Cli, out: &Path) -> Result<()> {
    if let Some(n) = thread_count(cli)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid("threads", e.to_string()))?;
    }
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Solve => {
            let s = run_solve(&cfg, out)?;
            println!("xbar_T = {}  residual = {:e}  iterations = {}", s.xbar_t, s.residual, s.iterations);
        }
        Command::Converge => {
            let s = run_convergence(&cfg, out)?;
            match &s.sup_z_mse {
                Some(f) => println!("sup_z_mse slope = {:.4} ± {:.4}", f.slope, f.slope_stderr),
                None => println!("empirical and mean-field paths agree exactly"),
            }
        }
        Command::Sweep => {
            let s = run_sensitivity(&cfg, out)?;
            println!("{} legs over {}", s.legs.len(), s.parameter.name());
        }
        Command::Preset { name, .. } => {
            run_preset(&cfg, out)?;
            println!("preset {name} written");
        }
    }
    println!("artifacts in {}", out.display());
    Ok(())
}

fn output_dir(cli: &Cli) -> PathBuf {
    if let Some(out) = &cli.out {
        return out.clone();
    }
    cli.config
        .as_ref()
        .and_then(|p| fs::read_to_string(p).ok())
        .and_then(|t| serde_json::from_str::<ScenarioConfig>(&t).ok())
        .and_then(|c| c.outputs)
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = output_dir(&cli);
    match run(&cli, &out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Err(w) = write_error(&out, &e) {
                eprintln!("could not write error.json: {w}");
            }
            ExitCode::FAILURE
        }
    }
}
