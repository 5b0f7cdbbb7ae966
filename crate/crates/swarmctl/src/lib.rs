//! Experiments over the swarm stability and reliability models: scenario
//! loading, the five `swarmctl` commands and their CSV/JSON outputs.

pub mod cli;
pub mod commands;
pub mod scenario;

use std::fmt::Write as _;

pub use commands::{
    cmd_delay_bound, cmd_joint, cmd_reliability, cmd_simulate, DelayBoundReport, JointSummary, SimulationSummary,
    SweepGrid, SweepOptions, SweepResult, SweepRow,
};
pub use scenario::{Scenario, SimSettings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    /// Non-Hurwitz system, quadrature failure and the like.
    #[error("{0}")]
    Numerical(swarm_core::Error),
    /// The run finished but the formation diverged or did not settle.
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) | CliError::NotConverged(_) => 2,
        }
    }
}

impl From<swarm_core::Error> for CliError {
    fn from(e: swarm_core::Error) -> Self {
        use swarm_core::Error::*;
        match e {
            InvalidGain { .. } | InvalidParameter { .. } | DivergentInterference(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Nine significant digits, locale independent.
pub fn sci(v: f64) -> String {
    format!("{v:.8e}")
}

/// Like [`sci`] but an empty field for NaN.
pub fn sci_or_empty(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        sci(v)
    }
}

pub(crate) fn csv_row(out: &mut String, fields: &[String]) {
    let _ = writeln!(out, "{}", fields.join(","));
}
