//! Scenario files: strict JSON with every omitted key filled from the
//! reference parameter set.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use swarm_core::formation::FormationTargets;
use swarm_core::stability::{ControlGains, DEFAULT_K};
use swarm_core::wireless::WirelessParams;
use swarm_core::Error as CoreError;

use crate::CliError;

/// Keys that are computed from other fields and may not be given.
const DERIVED_KEYS: [(&str, &str, &str); 5] = [
    ("targets", "x_bar_23", "x_bar_13 - x_bar_12"),
    ("targets", "x_bar_32", "x_bar_12 - x_bar_13"),
    ("targets", "y_bar_23", "y_bar_13 - y_bar_12"),
    ("targets", "y_bar_32", "y_bar_12 - y_bar_13"),
    ("radio", "eta", "beta (beta!)^(-1/beta)"),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    /// Integration step, s.
    pub step: f64,
    /// Simulated time, s.
    pub horizon: f64,
    /// Control period: the delay is redrawn this often, s.
    pub delay_resample: f64,
    /// Followers start up to this far from their slots on each axis, m.
    pub initial_position_spread: f64,
    /// Followers start up to this far from the target velocity on each axis, m/s.
    pub initial_velocity_spread: f64,
    /// Convergence threshold on every error coordinate.
    pub eps: f64,
    /// Errors must stay below `eps` this long, s.
    pub hold_window: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            step: 5e-4,
            horizon: 60.0,
            delay_resample: 0.01,
            initial_position_spread: 5.0,
            initial_velocity_spread: 2.0,
            eps: 1e-2,
            hold_window: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub gains: ControlGains,
    pub targets: FormationTargets,
    pub radio: WirelessParams,
    /// Scalar `k > 1` of the delay bound.
    pub k: f64,
    pub sim: SimSettings,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            gains: ControlGains::default(),
            targets: FormationTargets::default(),
            radio: WirelessParams::default(),
            k: DEFAULT_K,
            sim: SimSettings::default(),
            seed: 0,
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| {
            let offset = byte_offset(text, e.line(), e.column());
            match key_path_at(text, offset) {
                path if path.is_empty() => CliError::Config(format!("parse error: {e}")),
                path => CliError::Config(format!("{path}: parse error: {e}")),
            }
        })?;
        reject_derived(&value)?;
        let scenario: Scenario = serde_path_to_error::deserialize(value)
            .map_err(|e| CliError::Config(format!("{}: {}", e.path().clone(), e.into_inner())))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.gains.validate().map_err(|e| keyed("gains", e))?;
        self.radio.validate().map_err(|e| keyed("radio", e))?;
        let t = &self.targets;
        for (name, v) in [
            ("x_bar_12", t.x_bar_12),
            ("x_bar_13", t.x_bar_13),
            ("y_bar_12", t.y_bar_12),
            ("y_bar_13", t.y_bar_13),
            ("v_bar_x", t.v_bar_x),
            ("v_bar_y", t.v_bar_y),
        ] {
            if !v.is_finite() {
                return Err(CliError::Config(format!("targets.{name}: must be finite, got {v}")));
            }
        }
        if t.follower_spacing() == 0.0 {
            return Err(CliError::Config("targets: followers 2 and 3 share a slot".into()));
        }
        if !(self.k.is_finite() && self.k > 1.0) {
            return Err(CliError::Config(format!("k: must be finite and > 1, got {}", self.k)));
        }
        let s = &self.sim;
        for (name, v) in
            [("step", s.step), ("horizon", s.horizon), ("delay_resample", s.delay_resample), ("eps", s.eps)]
        {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("sim.{name}: must be finite and positive, got {v}")));
            }
        }
        for (name, v) in [
            ("initial_position_spread", s.initial_position_spread),
            ("initial_velocity_spread", s.initial_velocity_spread),
            ("hold_window", s.hold_window),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::Config(format!("sim.{name}: must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

fn reject_derived(value: &Value) -> Result<(), CliError> {
    for (section, key, formula) in DERIVED_KEYS {
        if value.get(section).and_then(|s| s.get(key)).is_some() {
            return Err(CliError::Config(format!("{section}.{key}: derived field, computed as {formula}; remove it")));
        }
    }
    Ok(())
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let before: usize = text.split('\n').take(line.saturating_sub(1)).map(|l| l.len() + 1).sum();
    (before + column.saturating_sub(1)).min(text.len())
}

/// Dotted path of the object key whose value spans byte `offset`, from a
/// light scan of the raw text. Used to locate syntax errors.
fn key_path_at(text: &str, offset: usize) -> String {
    let bytes = &text.as_bytes()[..offset.min(text.len())];
    // current key of every open container
    let mut stack: Vec<Option<String>> = Vec::new();
    let mut last_string = None;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'"' => {
                let start = i + 1;
                i += 1;
                while i < bytes.len() && bytes[i] != b'"' {
                    i += if bytes[i] == b'\\' { 2 } else { 1 };
                }
                last_string = text.get(start..i.min(bytes.len())).map(str::to_string);
            }
            b':' => {
                if let Some(top) = stack.last_mut() {
                    *top = last_string.take();
                }
            }
            b',' => {
                if let Some(top) = stack.last_mut() {
                    *top = None;
                }
            }
            b'{' | b'[' => stack.push(None),
            b'}' | b']' => {
                stack.pop();
            }
            _ => {}
        }
        i += 1;
    }
    stack.into_iter().flatten().collect::<Vec<_>>().join(".")
}

fn keyed(section: &str, e: CoreError) -> CliError {
    match e {
        CoreError::InvalidGain { name, value } => {
            CliError::Config(format!("{section}.{name}: must be finite and strictly positive, got {value}"))
        }
        CoreError::InvalidParameter { name, reason } => CliError::Config(format!("{section}.{name}: {reason}")),
        CoreError::DivergentInterference(alpha) => {
            CliError::Config(format!("{section}.alpha: must exceed 2, got {alpha}"))
        }
        other => CliError::Config(format!("{section}: {other}")),
    }
}
