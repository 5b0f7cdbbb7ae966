//! Argument parsing and dispatch for the `swarmctl` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use swarm_core::stability::M1Variant;

use crate::commands::{joint_csv, trajectory_csv};
use crate::{cmd_delay_bound, cmd_joint, cmd_reliability, cmd_simulate, CliError, Scenario, SweepGrid, SweepOptions};

const THREADS_ENV: &str = "SWARMCTL_THREADS";

#[derive(Parser, Debug)]
#[command(name = "swarmctl", version, about = "Stability and link reliability experiments for a three-UAV formation")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Largest wireless delay the formation tolerates.
    DelayBound {
        #[command(flatten)]
        common: Common,
        /// Coefficient at M1[3][0]: -â3 (derived) or -a3 (printed).
        #[arg(long, value_enum, default_value_t = M1Arg::Derived)]
        m1: M1Arg,
    },
    /// Simulate the formation under a random delay and report convergence.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Upper end of the delay range in ms; defaults to the stability bound.
        #[arg(long)]
        delay_ms: Option<f64>,
    },
    /// Analytic reliability over a density x spacing grid.
    Reliability {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: Sweep,
    },
    /// Reliability grid with a Monte Carlo column next to the analytic one.
    Montecarlo {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: Sweep,
    },
    /// Formation driven by delays drawn from the wireless link.
    Joint {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (CSV, or JSON for delay-bound).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the integration step, ms.
    #[arg(long)]
    step_ms: Option<f64>,
    /// Override the simulated horizon, s.
    #[arg(long)]
    horizon_s: Option<f64>,
}

#[derive(Args, Debug)]
struct Sweep {
    /// Interferer densities per m².
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.05, 0.1])]
    densities: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    spacing_min: f64,
    #[arg(long, default_value_t = 12.0)]
    spacing_max: f64,
    #[arg(long, default_value_t = 0.5)]
    spacing_step: f64,
    /// Monte Carlo trials per grid point.
    #[arg(long)]
    mc_trials: Option<u64>,
    /// Delay requirement in ms; defaults to the stability bound.
    #[arg(long)]
    tau_ms: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum M1Arg {
    Derived,
    Printed,
}

const DEFAULT_MC_TRIALS: u64 = 200_000;

fn scenario(common: &Common) -> Result<Scenario, CliError> {
    let mut s = Scenario::load(&common.config)?;
    if let Some(seed) = common.seed {
        s.seed = seed;
    }
    if let Some(ms) = common.step_ms {
        s.sim.step = ms * 1e-3;
    }
    if let Some(h) = common.horizon_s {
        s.sim.horizon = h;
    }
    s.validate()?;
    Ok(s)
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(CliError::from)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Size the global rayon pool from `SWARMCTL_THREADS` when it is set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn sweep(common: &Common, sweep: &Sweep, mc_trials: Option<u64>, out: &mut dyn Write) -> Result<(), CliError> {
    let s = scenario(common)?;
    let grid = SweepGrid::new(sweep.densities.clone(), sweep.spacing_min, sweep.spacing_max, sweep.spacing_step)?;
    let opts = SweepOptions { grid, mc_trials, required_delay: sweep.tau_ms.map(|ms| ms * 1e-3) };
    let result = cmd_reliability(&s, &opts)?;
    match &common.out {
        Some(path) => {
            write(path, &result.csv())?;
            emit(out, &result.text())?;
        }
        None => {
            emit(out, &result.csv())?;
            eprint!("{}", result.text());
        }
    }
    Ok(())
}

/// Execute a parsed command, writing the report to `out`. Parallel work runs
/// on the current rayon pool.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::DelayBound { common, m1 } => {
            let s = scenario(&common)?;
            let variant = match m1 {
                M1Arg::Derived => M1Variant::Derived,
                M1Arg::Printed => M1Variant::Printed,
            };
            let report = cmd_delay_bound(&s, variant)?;
            emit(out, &report.text())?;
            if let Some(path) = &common.out {
                write(path, &report.json())?;
            }
            Ok(())
        }
        Command::Simulate { common, delay_ms } => {
            let s = scenario(&common)?;
            let (traj, summary) = cmd_simulate(&s, delay_ms.map(|ms| ms * 1e-3))?;
            if let Some(path) = &common.out {
                write(path, &trajectory_csv(&traj))?;
            }
            emit(out, &summary.text())?;
            summary.outcome()
        }
        Command::Reliability { common, sweep: sw } => sweep(&common, &sw, sw.mc_trials, out),
        Command::Montecarlo { common, sweep: sw } => {
            sweep(&common, &sw, Some(sw.mc_trials.unwrap_or(DEFAULT_MC_TRIALS)), out)
        }
        Command::Joint { common } => {
            let s = scenario(&common)?;
            let (record, summary) = cmd_joint(&s)?;
            if let Some(path) = &common.out {
                write(path, &joint_csv(&record))?;
            }
            emit(out, &summary.text())?;
            summary.outcome()
        }
    }
}
