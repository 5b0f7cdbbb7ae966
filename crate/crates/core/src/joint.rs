//! Closed-loop run in which the follower-to-follower delay is drawn from the
//! wireless model every control period instead of from a fixed process.
//!
//! Loss policy: a packet whose delay exceeds the history depth (twice the
//! stability bound) is dropped and the follower keeps the last delayed
//! value it received.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::formation::{
    compute_errors, convergence_metrics, integrate_error_system, ConvergenceReport, DelayContext, DelayDraw,
    DelaySource, FormationTargets, SwarmState, Trajectory,
};
use crate::stability::{build_error_matrices, delay_bound, ControlGains};
use crate::wireless::{link_delay, sample_interference_nearest, InterferenceField, WirelessParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointConfig {
    pub gains: ControlGains,
    pub targets: FormationTargets,
    pub radio: WirelessParams,
    pub k: f64,
    pub step: f64,
    pub horizon: f64,
    pub control_period: f64,
    pub seed: u64,
    pub field: InterferenceField,
    pub near_count: usize,
    pub eps: f64,
    pub hold_window: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointPeriod {
    pub t: f64,
    /// Follower separation when the packet was sent, m.
    pub distance: f64,
    pub sinr: f64,
    /// Seconds; infinite when the SINR is zero.
    pub delay: f64,
    /// Delay exceeded the history depth and the packet was dropped.
    pub lost: bool,
    /// Delay within the stability bound.
    pub met: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointRunRecord {
    pub tau_max: f64,
    pub periods: Vec<JointPeriod>,
    pub trajectory: Trajectory,
    pub convergence: ConvergenceReport,
    pub delay_met_fraction: f64,
}

struct WirelessDelaySource<'a> {
    cfg: &'a JointConfig,
    tau_max: f64,
    signal: Gamma<f64>,
    rng: ChaCha8Rng,
    periods: Vec<JointPeriod>,
}

impl DelaySource for WirelessDelaySource<'_> {
    fn draw(&mut self, ctx: &DelayContext<'_>) -> DelayDraw {
        let radio = &self.cfg.radio;
        let distance = ctx.errors.follower_separation(&self.cfg.targets);
        let h = self.signal.sample(&mut self.rng);
        let interference = sample_interference_nearest(radio, &self.cfg.field, self.cfg.near_count, &mut self.rng);
        let sinr = radio.p_t * h * distance.powf(-radio.alpha) / (radio.noise_power() + interference);
        let delay = link_delay(sinr, radio);
        let lost = !(delay <= self.history_depth());
        self.periods.push(JointPeriod { t: ctx.t, distance, sinr, delay, lost, met: delay <= self.tau_max });
        if lost {
            DelayDraw::Lost
        } else {
            DelayDraw::Delay(delay)
        }
    }

    fn history_depth(&self) -> f64 {
        2.0 * self.tau_max
    }

    fn resample_period(&self) -> f64 {
        self.cfg.control_period
    }
}

pub fn run_joint(initial: &SwarmState, cfg: &JointConfig) -> Result<JointRunRecord> {
    cfg.radio.validate()?;
    let mats = build_error_matrices(&cfg.gains)?;
    let tau_max = delay_bound(&mats, cfg.k)?.tau_max;
    let beta = f64::from(cfg.radio.beta);

    let mut source = WirelessDelaySource {
        cfg,
        tau_max,
        signal: Gamma::new(beta, 1.0 / beta).expect("beta >= 1"),
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        periods: Vec::new(),
    };
    let trajectory =
        integrate_error_system(&mats, compute_errors(initial, &cfg.targets), &mut source, cfg.step, cfg.horizon)?;
    let convergence = convergence_metrics(&trajectory, cfg.eps, cfg.hold_window)?;
    let periods = source.periods;
    let met = periods.iter().filter(|p| p.met).count();
    let delay_met_fraction = if periods.is_empty() { 0.0 } else { met as f64 / periods.len() as f64 };

    Ok(JointRunRecord { tau_max, periods, trajectory, convergence, delay_met_fraction })
}
