use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::delay::{DelayContext, DelayDraw, DelayProcess, DelaySource};
use super::{compute_errors, error_dynamics_rhs, FormationErrors, FormationTargets, SwarmState};
use crate::error::{invalid, Result};
use crate::stability::{build_error_matrices, ControlGains, SystemMatrices};

/// Largest accepted integration step (seconds).
pub const MAX_STEP: f64 = 1e-3;

/// Any error coordinate beyond this magnitude marks the run as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub errors: FormationErrors,
    /// Delay active from this sample to the next, in seconds; NaN while a
    /// lost packet is being held.
    pub tau: f64,
}

/// Error coordinates on a uniform grid `t_i = i * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub step: f64,
    pub horizon: f64,
    pub scenario_hash: u64,
    pub samples: Vec<TrajectorySample>,
    pub status: RunStatus,
}

impl Trajectory {
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&TrajectorySample> {
        self.samples.last()
    }
}

pub(crate) fn fnv1a(words: impl IntoIterator<Item = u64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

fn step_count(step: f64, horizon: f64) -> Result<usize> {
    if !(step.is_finite() && step > 0.0 && step <= MAX_STEP) {
        return Err(invalid("step", format!("must lie in (0, {MAX_STEP}] s, got {step}")));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid("horizon", format!("must be positive, got {horizon}")));
    }
    let ratio = horizon / step;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-6 * ratio.max(1.0) {
        return Err(invalid("horizon", format!("{horizon} s is not a whole number of {step} s steps")));
    }
    Ok(n as usize)
}

struct History {
    states: VecDeque<FormationErrors>,
    first: usize,
    capacity: usize,
}

impl History {
    fn new(initial: FormationErrors, capacity: usize) -> Self {
        let mut states = VecDeque::with_capacity(capacity);
        states.push_back(initial);
        Self { states, first: 0, capacity }
    }

    fn push(&mut self, e: FormationErrors) {
        if self.states.len() == self.capacity {
            self.states.pop_front();
            self.first += 1;
        }
        self.states.push_back(e);
    }

    fn at(&self, index: usize) -> &FormationErrors {
        &self.states[index.saturating_sub(self.first).min(self.states.len() - 1)]
    }
}

fn lerp(a: &FormationErrors, b: &FormationErrors, w: f64) -> FormationErrors {
    FormationErrors { x: a.x + (b.x - a.x) * w, y: a.y + (b.y - a.y) * w }
}

fn rhs(e: &FormationErrors, delayed: &FormationErrors, mats: &SystemMatrices) -> FormationErrors {
    FormationErrors { x: error_dynamics_rhs(&e.x, &delayed.x, mats), y: error_dynamics_rhs(&e.y, &delayed.y, mats) }
}

fn axpy(e: &FormationErrors, h: f64, k: &FormationErrors) -> FormationErrors {
    FormationErrors { x: e.x + k.x * h, y: e.y + k.y * h }
}

/// State at `t_n + c h - tau`. History before `t = 0` is the initial state;
/// lookups landing inside the current step interpolate between `e_n` and the
/// stage state at `t_n + c h`.
fn delayed_state(history: &History, n: usize, c: f64, tau: f64, h: f64, stage: &FormationErrors) -> FormationErrors {
    if tau <= 0.0 {
        return *stage;
    }
    let pos = n as f64 + c - tau / h;
    if pos <= 0.0 {
        return *history.at(0);
    }
    let m = pos.floor() as usize;
    if m >= n {
        let w = (pos - n as f64) / c;
        lerp(history.at(n), stage, w)
    } else {
        lerp(history.at(m), history.at(m + 1), pos - m as f64)
    }
}

/// Fixed-step RK4 on the two axis error systems sharing one delayed link.
///
/// The delay is drawn from `source` at every multiple of its resample period
/// and held constant in between. A [`DelayDraw::Lost`] freezes the delayed
/// term at its last value until the next successful draw.
pub fn integrate_error_system<S: DelaySource + ?Sized>(
    mats: &SystemMatrices,
    initial: FormationErrors,
    source: &mut S,
    step: f64,
    horizon: f64,
) -> Result<Trajectory> {
    let steps = step_count(step, horizon)?;
    let period = source.resample_period();
    if !(period.is_finite() && period > 0.0) {
        return Err(invalid("resample_period", format!("must be positive, got {period}")));
    }
    let period_steps = ((period / step).round() as usize).max(1);
    let depth = source.history_depth().max(0.0);
    let history_len = (depth / step).ceil() as usize + 3;

    let h = step;
    let mut history = History::new(initial, history_len);
    let mut e = initial;
    let mut held = initial;
    let mut active = DelayDraw::Delay(0.0);
    let mut samples = Vec::with_capacity(steps + 1);
    let mut status = RunStatus::Completed;

    for n in 0..=steps {
        if n % period_steps == 0 {
            active = source.draw(&DelayContext { t: n as f64 * h, errors: &e });
        }
        let tau = match active {
            DelayDraw::Delay(t) => t,
            DelayDraw::Lost => f64::NAN,
        };
        samples.push(TrajectorySample { errors: e, tau });
        if n == steps {
            break;
        }

        let lookup = |c: f64, stage: &FormationErrors| match active {
            DelayDraw::Delay(tau) => delayed_state(&history, n, c, tau, h, stage),
            DelayDraw::Lost => held,
        };

        let k1 = rhs(&e, &lookup(0.0, &e), mats);
        let y2 = axpy(&e, 0.5 * h, &k1);
        let k2 = rhs(&y2, &lookup(0.5, &y2), mats);
        let y3 = axpy(&e, 0.5 * h, &k2);
        let k3 = rhs(&y3, &lookup(0.5, &y3), mats);
        let y4 = axpy(&e, h, &k3);
        let d4 = lookup(1.0, &y4);
        let k4 = rhs(&y4, &d4, mats);
        held = d4;

        let next = FormationErrors {
            x: e.x + (k1.x + k2.x * 2.0 + k3.x * 2.0 + k4.x) * (h / 6.0),
            y: e.y + (k1.y + k2.y * 2.0 + k3.y * 2.0 + k4.y) * (h / 6.0),
        };
        if !next.is_finite() || next.max_abs() > DIVERGENCE_LIMIT {
            status = RunStatus::Diverged;
            break;
        }
        e = next;
        history.push(e);
    }

    let mut words = vec![step.to_bits(), horizon.to_bits(), period.to_bits(), depth.to_bits()];
    words.extend(mats.m1.iter().chain(mats.m2.iter()).map(|v| v.to_bits()));
    words.extend(initial.x.iter().chain(initial.y.iter()).map(|v| v.to_bits()));

    Ok(Trajectory { step, horizon, scenario_hash: fnv1a(words), samples, status })
}

/// Simulate the formation from `initial` under `delay`.
///
/// The followers' error system is integrated directly; the leader keeps the
/// target velocity throughout. Requires `step <= tau_max / 10` whenever the
/// delay is non-zero.
pub fn integrate_dde(
    initial: &SwarmState,
    targets: &FormationTargets,
    gains: &ControlGains,
    delay: &DelayProcess,
    step: f64,
    horizon: f64,
) -> Result<Trajectory> {
    if !(delay.tau_max.is_finite() && delay.tau_max >= 0.0) {
        return Err(invalid("tau_max", format!("must be finite and non-negative, got {}", delay.tau_max)));
    }
    if delay.tau_max > 0.0 && step > delay.tau_max / 10.0 {
        return Err(invalid("step", format!("{step} s exceeds a tenth of the maximum delay {} s", delay.tau_max)));
    }
    let mats = build_error_matrices(gains)?;
    let e0 = compute_errors(initial, targets);
    let mut traj = integrate_error_system(&mats, e0, &mut delay.sampler(), step, horizon)?;
    traj.scenario_hash = fnv1a([
        traj.scenario_hash,
        delay.tau_max.to_bits(),
        delay.resample_period.to_bits(),
        delay.seed,
        delay.kind as u64,
    ]);
    Ok(traj)
}
