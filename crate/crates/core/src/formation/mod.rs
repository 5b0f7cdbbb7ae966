//! Leader–follower kinematics, spacing/velocity errors and the delayed
//! error dynamics of the three-UAV triangle formation.

mod convergence;
mod delay;
mod integrate;

pub use convergence::{convergence_metrics, lyapunov_values, ConvergenceReport};
pub use delay::{DelayContext, DelayDraw, DelayKind, DelayProcess, DelaySampler, DelaySource, MIN_DELAY};
pub use integrate::{
    integrate_dde, integrate_error_system, RunStatus, Trajectory, TrajectorySample, DIVERGENCE_LIMIT, MAX_STEP,
};

use nalgebra::Vector4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::stability::{ControlGains, Follower, SystemMatrices};

/// Per-axis error vector `[δ12, δ13, z2, z3]`.
pub type ErrorVector = Vector4<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Leader-relative target spacings (m) and the swarm target velocity (m/s).
///
/// Follower-to-follower spacings are derived, never stored, so the target
/// geometry is always consistent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormationTargets {
    pub x_bar_12: f64,
    pub x_bar_13: f64,
    pub y_bar_12: f64,
    pub y_bar_13: f64,
    pub v_bar_x: f64,
    pub v_bar_y: f64,
}

impl Default for FormationTargets {
    fn default() -> Self {
        Self { x_bar_12: 3.0, x_bar_13: 4.0, y_bar_12: 4.0, y_bar_13: 3.0, v_bar_x: 5.0, v_bar_y: 5.0 }
    }
}

impl FormationTargets {
    pub fn x_bar_23(&self) -> f64 {
        self.x_bar_13 - self.x_bar_12
    }
    pub fn x_bar_32(&self) -> f64 {
        -self.x_bar_23()
    }
    pub fn y_bar_23(&self) -> f64 {
        self.y_bar_13 - self.y_bar_12
    }
    pub fn y_bar_32(&self) -> f64 {
        -self.y_bar_23()
    }

    /// Target offset of `follower` behind the leader on `axis`.
    pub fn leader_spacing(&self, axis: Axis, follower: Follower) -> f64 {
        match (axis, follower) {
            (Axis::X, Follower::Two) => self.x_bar_12,
            (Axis::X, Follower::Three) => self.x_bar_13,
            (Axis::Y, Follower::Two) => self.y_bar_12,
            (Axis::Y, Follower::Three) => self.y_bar_13,
        }
    }

    /// Target `x̄_{j,i}` with `j` the peer of follower `i`.
    pub fn peer_spacing(&self, axis: Axis, follower: Follower) -> f64 {
        match (axis, follower) {
            (Axis::X, Follower::Two) => self.x_bar_32(),
            (Axis::X, Follower::Three) => self.x_bar_23(),
            (Axis::Y, Follower::Two) => self.y_bar_32(),
            (Axis::Y, Follower::Three) => self.y_bar_23(),
        }
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.v_bar_x, self.v_bar_y]
    }

    /// Distance between the followers when in formation.
    pub fn follower_spacing(&self) -> f64 {
        self.x_bar_23().hypot(self.y_bar_23())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UavState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl UavState {
    fn position(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
        }
    }
}

/// Positions and velocities of the leader (index 0) and followers 2 and 3.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SwarmState {
    pub t: f64,
    pub uavs: [UavState; 3],
}

fn slot(f: Follower) -> usize {
    match f {
        Follower::Two => 1,
        Follower::Three => 2,
    }
}

impl SwarmState {
    pub fn leader(&self) -> &UavState {
        &self.uavs[0]
    }

    pub fn follower(&self, f: Follower) -> &UavState {
        &self.uavs[slot(f)]
    }

    /// Exact target formation with the leader at `(x1, y1)`.
    pub fn in_formation(targets: &FormationTargets, x1: f64, y1: f64) -> Self {
        reconstruct_state(0.0, x1, y1, &FormationErrors::default(), targets)
    }

    /// Leader at the origin; followers displaced from their slots by up to
    /// `position_spread` metres and from the target velocity by up to
    /// `velocity_spread` m/s on each axis.
    pub fn perturbed(targets: &FormationTargets, position_spread: f64, velocity_spread: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = Self::in_formation(targets, 0.0, 0.0);
        for uav in &mut state.uavs[1..] {
            if position_spread > 0.0 {
                uav.x += rng.random_range(-position_spread..=position_spread);
                uav.y += rng.random_range(-position_spread..=position_spread);
            }
            if velocity_spread > 0.0 {
                uav.vx += rng.random_range(-velocity_spread..=velocity_spread);
                uav.vy += rng.random_range(-velocity_spread..=velocity_spread);
            }
        }
        state
    }
}

/// Error vectors of both axes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FormationErrors {
    pub x: ErrorVector,
    pub y: ErrorVector,
}

impl FormationErrors {
    pub fn axis(&self, axis: Axis) -> &ErrorVector {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.x.amax().max(self.y.amax())
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.y.iter()).all(|v| v.is_finite())
    }

    /// Current distance between followers 2 and 3 implied by the errors.
    pub fn follower_separation(&self, targets: &FormationTargets) -> f64 {
        // x2 - x3 = x̄23 + δ13 - δ12
        let dx = targets.x_bar_23() + self.x[1] - self.x[0];
        let dy = targets.y_bar_23() + self.y[1] - self.y[0];
        dx.hypot(dy)
    }
}

pub fn compute_errors(state: &SwarmState, targets: &FormationTargets) -> FormationErrors {
    let l = state.leader();
    let f2 = state.follower(Follower::Two);
    let f3 = state.follower(Follower::Three);
    FormationErrors {
        x: ErrorVector::new(
            l.x - f2.x - targets.x_bar_12,
            l.x - f3.x - targets.x_bar_13,
            f2.vx - targets.v_bar_x,
            f3.vx - targets.v_bar_x,
        ),
        y: ErrorVector::new(
            l.y - f2.y - targets.y_bar_12,
            l.y - f3.y - targets.y_bar_13,
            f2.vy - targets.v_bar_y,
            f3.vy - targets.v_bar_y,
        ),
    }
}

/// Inverse of [`compute_errors`] given the leader position; the leader flies
/// at the target velocity.
pub fn reconstruct_state(t: f64, x1: f64, y1: f64, errors: &FormationErrors, targets: &FormationTargets) -> SwarmState {
    let (ex, ey) = (&errors.x, &errors.y);
    let leader = UavState { x: x1, y: y1, vx: targets.v_bar_x, vy: targets.v_bar_y };
    let f2 = UavState {
        x: x1 - targets.x_bar_12 - ex[0],
        y: y1 - targets.y_bar_12 - ey[0],
        vx: targets.v_bar_x + ex[2],
        vy: targets.v_bar_y + ey[2],
    };
    let f3 = UavState {
        x: x1 - targets.x_bar_13 - ex[1],
        y: y1 - targets.y_bar_13 - ey[1],
        vx: targets.v_bar_x + ex[3],
        vy: targets.v_bar_y + ey[3],
    };
    SwarmState { t, uavs: [leader, f2, f3] }
}

/// Spacing errors a follower derives from its radar ranges, per axis
/// `[x, y]`: `δ_{1,i}` to the leader and `δ_{j,i}` to the peer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SensedSpacings {
    pub leader: [f64; 2],
    pub peer: [f64; 2],
}

pub fn sense_spacings(state: &SwarmState, targets: &FormationTargets, follower: Follower) -> SensedSpacings {
    let own = state.follower(follower);
    let peer = state.follower(follower.peer());
    let leader = state.leader();
    let mut sensed = SensedSpacings::default();
    for (k, axis) in [Axis::X, Axis::Y].into_iter().enumerate() {
        sensed.leader[k] = leader.position(axis) - own.position(axis) - targets.leader_spacing(axis, follower);
        sensed.peer[k] = peer.position(axis) - own.position(axis) - targets.peer_spacing(axis, follower);
    }
    sensed
}

/// Follower acceleration `(ax, ay)` from the control law
/// `u = a δ_{1,i} + b (v1(t-τ) - v_i) + â δ_{j,i} + b̂ (v_j(t-τ) - v_i)`.
///
/// Spacings come from on-board radar and are current; both velocity inputs
/// arrive over the wireless link and carry its delay.
pub fn control_acceleration(
    follower: Follower,
    own_velocity: [f64; 2],
    delayed_leader_velocity: [f64; 2],
    delayed_peer_velocity: [f64; 2],
    sensed: &SensedSpacings,
    gains: &ControlGains,
) -> [f64; 2] {
    let g = gains.follower(follower);
    std::array::from_fn(|k| {
        g.a * sensed.leader[k]
            + g.b * (delayed_leader_velocity[k] - own_velocity[k])
            + g.a_hat * sensed.peer[k]
            + g.b_hat * (delayed_peer_velocity[k] - own_velocity[k])
    })
}

/// `ė = M1 e + M2 e_delayed`.
pub fn error_dynamics_rhs(e: &ErrorVector, e_delayed: &ErrorVector, mats: &SystemMatrices) -> ErrorVector {
    mats.m1 * e + mats.m2 * e_delayed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::build_error_matrices;

    #[test]
    fn derived_spacings_match_scenario() {
        let t = FormationTargets::default();
        assert_eq!(t.x_bar_23(), 1.0);
        assert_eq!(t.y_bar_23(), -1.0);
        assert_eq!(t.x_bar_32(), -1.0);
        assert_eq!(t.y_bar_32(), 1.0);
    }

    #[test]
    fn zero_errors_in_formation() {
        let t = FormationTargets::default();
        let s = SwarmState::in_formation(&t, 12.0, -7.0);
        assert_eq!(compute_errors(&s, &t), FormationErrors::default());
    }

    #[test]
    fn leader_shift() {
        let t = FormationTargets::default();
        let mut s = SwarmState::in_formation(&t, 0.0, 0.0);
        s.uavs[0].x += 1.0;
        let e = compute_errors(&s, &t);
        assert_eq!(e.x, ErrorVector::new(1.0, 1.0, 0.0, 0.0));
        assert_eq!(e.y, ErrorVector::zeros());
    }

    #[test]
    fn equilibrium_control_is_zero() {
        let g = ControlGains::default();
        let v = [5.0, 5.0];
        for f in [Follower::Two, Follower::Three] {
            assert_eq!(control_acceleration(f, v, v, v, &SensedSpacings::default(), &g), [0.0, 0.0]);
        }
    }

    #[test]
    fn control_law_arithmetic() {
        let g = ControlGains::default();
        let sensed = SensedSpacings { leader: [1.0, 0.0], peer: [0.5, 0.0] };
        let v = [0.0, 0.0];
        let u = control_acceleration(Follower::Two, v, v, v, &sensed, &g);
        assert_eq!(u, [1.75, 0.0]);
    }

    #[test]
    fn rhs_zero_and_undelayed_limit() {
        let m = build_error_matrices(&ControlGains::default()).unwrap();
        let z = ErrorVector::zeros();
        assert_eq!(error_dynamics_rhs(&z, &z, &m), z);
        let e = ErrorVector::new(0.3, -1.2, 2.0, 0.7);
        let got = error_dynamics_rhs(&e, &e, &m);
        assert!((got - m.undelayed() * e).amax() < 1e-15);
    }

    #[test]
    fn perturbed_is_deterministic() {
        let t = FormationTargets::default();
        assert_eq!(SwarmState::perturbed(&t, 5.0, 2.0, 9), SwarmState::perturbed(&t, 5.0, 2.0, 9));
        assert_ne!(SwarmState::perturbed(&t, 5.0, 2.0, 9), SwarmState::perturbed(&t, 5.0, 2.0, 10));
        let s = SwarmState::perturbed(&t, 5.0, 2.0, 9);
        assert_eq!(s.uavs[0], UavState { x: 0.0, y: 0.0, vx: 5.0, vy: 5.0 });
    }

    #[test]
    fn follower_separation_in_formation() {
        let t = FormationTargets::default();
        let sep = FormationErrors::default().follower_separation(&t);
        assert!((sep - 2f64.sqrt()).abs() < 1e-15);
    }
}
