use rayon::prelude::*;
use serde::Serialize;
use swarm_core::formation::{
    convergence_metrics, integrate_dde, ConvergenceReport, DelayProcess, RunStatus, SwarmState, Trajectory,
};
use swarm_core::joint::{run_joint, JointConfig, JointRunRecord};
use swarm_core::stability::{build_error_matrices_with, delay_bound, formation_delay_bound, M1Variant};
use swarm_core::wireless::{
    link_reliability, max_spacing_for_reliability, mc_reliability, InterferenceField, LinkBudget, McOptions,
};

use crate::{csv_row, sci, sci_or_empty, CliError, Scenario};

pub const TRAJECTORY_HEADER: &str = "t,delta12x,delta13x,z2x,z3x,delta12y,delta13y,z2y,z3y,tau_ms";
pub const SWEEP_HEADER: &str = "density_per_m2,spacing_m,reliability_analytic,reliability_mc,mc_ci95";
pub const JOINT_HEADER: &str = "t,distance_m,sinr,delay_ms,lost,met";

/// Interferers drawn individually per Monte Carlo trial.
const MC_NEAR_COUNT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayBoundReport {
    pub tau_max_ms: f64,
    pub lambda_max: f64,
    pub residual: f64,
    pub k: f64,
    pub m1_variant: M1Variant,
}

impl DelayBoundReport {
    pub fn text(&self) -> String {
        format!(
            "tau_max_ms: {:.4}\nlambda_max: {:.6}\nlyapunov_residual: {:.3e}\nk: {}\n",
            self.tau_max_ms, self.lambda_max, self.residual, self.k
        )
    }

    pub fn json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

pub fn cmd_delay_bound(s: &Scenario, variant: M1Variant) -> Result<DelayBoundReport, CliError> {
    let b = match variant {
        M1Variant::Derived => formation_delay_bound(&s.gains, s.k)?,
        _ => delay_bound(&build_error_matrices_with(&s.gains, variant)?, s.k)?,
    };
    Ok(DelayBoundReport {
        tau_max_ms: b.tau_max * 1e3,
        lambda_max: b.lambda_max,
        residual: b.residual,
        k: b.k,
        m1_variant: variant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationSummary {
    /// Stability bound of the scenario, ms.
    pub tau_max_ms: f64,
    /// Upper end of the simulated delay range, ms.
    pub delay_max_ms: f64,
    pub steps: usize,
    pub scenario_hash: u64,
    #[serde(flatten)]
    pub convergence: ConvergenceReport,
}

impl SimulationSummary {
    pub fn text(&self) -> String {
        let settle = self.convergence.settle_time.map_or("none".to_string(), |t| format!("{t:.4}"));
        format!(
            "tau_max_ms: {:.4}\ndelay_max_ms: {:.4}\nstatus: {}\nconverged: {}\nsettle_time_s: {settle}\nmax_overshoot: {:.6}\n",
            self.tau_max_ms,
            self.delay_max_ms,
            status_name(self.convergence.status),
            self.convergence.converged,
            self.convergence.max_overshoot,
        )
    }

    /// Exit status of the run: diverged or unsettled runs are failures.
    pub fn outcome(&self) -> Result<(), CliError> {
        match (self.convergence.status, self.convergence.converged) {
            (RunStatus::Diverged, _) => Err(CliError::NotConverged("formation diverged".into())),
            (_, false) => Err(CliError::NotConverged("formation did not settle within the horizon".into())),
            _ => Ok(()),
        }
    }
}

fn status_name(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Completed => "completed",
        RunStatus::Diverged => "diverged",
    }
}

pub fn initial_state(s: &Scenario) -> SwarmState {
    SwarmState::perturbed(&s.targets, s.sim.initial_position_spread, s.sim.initial_velocity_spread, s.seed)
}

/// Simulate under a delay redrawn uniformly every control period, up to
/// `delay_max` seconds (the stability bound when `None`; zero disables the
/// delay).
pub fn cmd_simulate(s: &Scenario, delay_max: Option<f64>) -> Result<(Trajectory, SimulationSummary), CliError> {
    let tau_max = formation_delay_bound(&s.gains, s.k)?.tau_max;
    let delay_max = delay_max.unwrap_or(tau_max);
    if !(delay_max.is_finite() && delay_max >= 0.0) {
        return Err(CliError::Usage(format!("delay must be finite and non-negative, got {delay_max}")));
    }
    let process = if delay_max == 0.0 {
        DelayProcess::none()
    } else {
        DelayProcess::uniform(delay_max, s.sim.delay_resample, s.seed)
    };
    let traj = integrate_dde(&initial_state(s), &s.targets, &s.gains, &process, s.sim.step, s.sim.horizon)?;
    let convergence = convergence_metrics(&traj, s.sim.eps, s.sim.hold_window)?;
    let summary = SimulationSummary {
        tau_max_ms: tau_max * 1e3,
        delay_max_ms: delay_max * 1e3,
        steps: traj.len(),
        scenario_hash: traj.scenario_hash,
        convergence,
    };
    Ok((traj, summary))
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.len() * 170);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (i, s) in traj.samples.iter().enumerate() {
        let mut fields = Vec::with_capacity(10);
        fields.push(sci(traj.time(i)));
        fields.extend(s.errors.x.iter().chain(s.errors.y.iter()).map(|&v| sci(v)));
        fields.push(sci_or_empty(s.tau * 1e3));
        csv_row(&mut out, &fields);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub densities: Vec<f64>,
    pub spacings: Vec<f64>,
}

impl SweepGrid {
    /// Spacings `min, min + step, ...` up to and including `max`.
    pub fn new(densities: Vec<f64>, min: f64, max: f64, step: f64) -> Result<Self, CliError> {
        if densities.is_empty() {
            return Err(CliError::Usage("density list is empty".into()));
        }
        if let Some(d) = densities.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(CliError::Usage(format!("densities must be finite and non-negative, got {d}")));
        }
        if !(min.is_finite() && max.is_finite() && min > 0.0 && max >= min) {
            return Err(CliError::Usage(format!("need 0 < spacing-min <= spacing-max, got {min} and {max}")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(CliError::Usage(format!("spacing-step must be positive, got {step}")));
        }
        let count = ((max - min) / step + 1e-9).floor() as usize + 1;
        let spacings = (0..count).map(|i| min + i as f64 * step).collect();
        Ok(Self { densities, spacings })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub grid: SweepGrid,
    /// Monte Carlo trials per grid point; analytic only when `None`.
    pub mc_trials: Option<u64>,
    /// Delay requirement in seconds; the scenario's stability bound when
    /// `None`.
    pub required_delay: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub density: f64,
    pub spacing: f64,
    pub analytic: f64,
    pub mc: Option<f64>,
    pub mc_ci95: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub required_delay_ms: f64,
    pub rows: Vec<SweepRow>,
    /// Per density, the largest spacing with analytic reliability >= 0.9.
    pub spacing_for_90: Vec<(f64, Option<f64>)>,
}

fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

pub fn cmd_reliability(s: &Scenario, opts: &SweepOptions) -> Result<SweepResult, CliError> {
    let tau = match opts.required_delay {
        Some(t) if t.is_finite() && t > 0.0 => t,
        Some(t) => return Err(CliError::Usage(format!("required delay must be positive, got {t}"))),
        None => formation_delay_bound(&s.gains, s.k)?.tau_max,
    };
    let points: Vec<(f64, f64)> =
        opts.grid.densities.iter().flat_map(|&l| opts.grid.spacings.iter().map(move |&d| (l, d))).collect();
    let mc_options = McOptions { field: InterferenceField::default(), near_count: MC_NEAR_COUNT, ..Default::default() };

    let rows = points
        .par_iter()
        .enumerate()
        .map(|(i, &(density, spacing))| -> Result<SweepRow, CliError> {
            let params = s.radio.with_density(density);
            let budget = LinkBudget::from_required_delay(spacing, tau, &params)?;
            let analytic = link_reliability(&budget, &params)?.value;
            let (mc, mc_ci95) = match opts.mc_trials {
                Some(n) => {
                    let est = mc_reliability(&budget, &params, n, point_seed(s.seed, i), &mc_options)?;
                    (Some(est.value), est.ci_halfwidth_95)
                }
                None => (None, None),
            };
            Ok(SweepRow { density, spacing, analytic, mc, mc_ci95 })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let (lo, hi) = (opts.grid.spacings[0], *opts.grid.spacings.last().expect("non-empty grid"));
    let spacing_for_90 = opts
        .grid
        .densities
        .iter()
        .map(|&l| Ok((l, max_spacing_for_reliability(0.9, tau, &s.radio.with_density(l), lo, hi)?)))
        .collect::<Result<Vec<_>, CliError>>()?;

    Ok(SweepResult { required_delay_ms: tau * 1e3, rows, spacing_for_90 })
}

impl SweepResult {
    pub fn csv(&self) -> String {
        let mut out = String::new();
        out.push_str(SWEEP_HEADER);
        out.push('\n');
        for r in &self.rows {
            csv_row(
                &mut out,
                &[
                    r.density.to_string(),
                    r.spacing.to_string(),
                    sci(r.analytic),
                    r.mc.map(sci).unwrap_or_default(),
                    r.mc_ci95.map(sci).unwrap_or_default(),
                ],
            );
        }
        out
    }

    pub fn text(&self) -> String {
        let mut out = format!("required_delay_ms: {:.4}\n", self.required_delay_ms);
        for (l, d) in &self.spacing_for_90 {
            let d = d.map_or("below grid".to_string(), |d| format!("{d:.3}"));
            out.push_str(&format!("density {l}: spacing_for_0.9_m: {d}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointSummary {
    pub tau_max_ms: f64,
    pub periods: usize,
    pub delay_met_fraction: f64,
    pub lost_fraction: f64,
    /// Analytic reliability at the formation's target follower spacing.
    pub reliability_at_target: f64,
    #[serde(flatten)]
    pub convergence: ConvergenceReport,
}

impl JointSummary {
    pub fn text(&self) -> String {
        let settle = self.convergence.settle_time.map_or("none".to_string(), |t| format!("{t:.4}"));
        format!(
            "tau_max_ms: {:.4}\nperiods: {}\ndelay_met_fraction: {:.6}\nlost_fraction: {:.6}\nreliability_at_target: {:.6}\nstatus: {}\nconverged: {}\nsettle_time_s: {settle}\n",
            self.tau_max_ms,
            self.periods,
            self.delay_met_fraction,
            self.lost_fraction,
            self.reliability_at_target,
            status_name(self.convergence.status),
            self.convergence.converged,
        )
    }

    pub fn outcome(&self) -> Result<(), CliError> {
        SimulationSummary {
            tau_max_ms: 0.0,
            delay_max_ms: 0.0,
            steps: 0,
            scenario_hash: 0,
            convergence: self.convergence,
        }
        .outcome()
    }
}

pub fn joint_config(s: &Scenario) -> JointConfig {
    JointConfig {
        gains: s.gains,
        targets: s.targets,
        radio: s.radio,
        k: s.k,
        step: s.sim.step,
        horizon: s.sim.horizon,
        control_period: s.sim.delay_resample,
        seed: s.seed,
        field: InterferenceField::default(),
        near_count: MC_NEAR_COUNT,
        eps: s.sim.eps,
        hold_window: s.sim.hold_window,
    }
}

pub fn cmd_joint(s: &Scenario) -> Result<(JointRunRecord, JointSummary), CliError> {
    let record = run_joint(&initial_state(s), &joint_config(s))?;
    let budget = LinkBudget::from_required_delay(s.targets.follower_spacing(), record.tau_max, &s.radio)?;
    let lost = record.periods.iter().filter(|p| p.lost).count();
    let n = record.periods.len();
    let summary = JointSummary {
        tau_max_ms: record.tau_max * 1e3,
        periods: n,
        delay_met_fraction: record.delay_met_fraction,
        lost_fraction: if n == 0 { 0.0 } else { lost as f64 / n as f64 },
        reliability_at_target: link_reliability(&budget, &s.radio)?.value,
        convergence: record.convergence,
    };
    Ok((record, summary))
}

pub fn joint_csv(record: &JointRunRecord) -> String {
    let mut out = String::new();
    out.push_str(JOINT_HEADER);
    out.push('\n');
    for p in &record.periods {
        let delay = if p.delay.is_finite() { sci(p.delay * 1e3) } else { "inf".to_string() };
        csv_row(
            &mut out,
            &[sci(p.t), sci(p.distance), sci(p.sinr), delay, (p.lost as u8).to_string(), (p.met as u8).to_string()],
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_both_ends() {
        let g = SweepGrid::new(vec![0.05], 1.0, 10.0, 0.5).unwrap();
        assert_eq!(g.spacings.len(), 19);
        assert_eq!(g.spacings[0], 1.0);
        assert_eq!(*g.spacings.last().unwrap(), 10.0);
        let g = SweepGrid::new(vec![0.05], 2.0, 10.0, 2.0).unwrap();
        assert_eq!(g.spacings, vec![2.0, 4.0, 6.0, 8.0, 10.0]);
        let g = SweepGrid::new(vec![0.05], 0.1, 0.3, 0.1).unwrap();
        assert_eq!(g.spacings.len(), 3);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(SweepGrid::new(vec![], 1.0, 2.0, 1.0).is_err());
        assert!(SweepGrid::new(vec![-0.1], 1.0, 2.0, 1.0).is_err());
        assert!(SweepGrid::new(vec![0.1], 0.0, 2.0, 1.0).is_err());
        assert!(SweepGrid::new(vec![0.1], 3.0, 2.0, 1.0).is_err());
        assert!(SweepGrid::new(vec![0.1], 1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn k_two_respects_ceiling() {
        let s = Scenario { k: 2.0, ..Scenario::default() };
        let r = cmd_delay_bound(&s, M1Variant::Derived).unwrap();
        assert!(r.tau_max_ms <= 250.0);
    }

    #[test]
    fn sweep_columns_non_increasing_in_spacing() {
        let grid = SweepGrid::new(vec![0.01, 0.05, 0.1], 1.0, 12.0, 0.25).unwrap();
        let opts = SweepOptions { grid, mc_trials: None, required_delay: Some(0.0182) };
        let r = cmd_reliability(&Scenario::default(), &opts).unwrap();
        for col in r.rows.chunks(opts.grid.spacings.len()) {
            assert!(col.windows(2).all(|w| w[1].analytic <= w[0].analytic + 1e-12));
        }
        assert!(r.csv().lines().skip(1).all(|l| l.ends_with(",,")));
    }

    #[test]
    fn empty_field_for_held_delay() {
        assert_eq!(sci_or_empty(f64::NAN), "");
        assert_eq!(sci(18.2), "1.82000000e1");
    }
}
