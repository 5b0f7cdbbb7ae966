//! Error-dynamics matrices and the maximum tolerable wireless delay.
//!
//! The follower control law couples the two followers through the delayed
//! peer velocity, giving per axis
//!
//! ```text
//! ė(t) = M1 e(t) + M2 e(t - Δτ(t)),   e = [δ12, δ13, z2, z3]ᵀ
//! ```
//!
//! The delay bound is `1 / λmax(G)` with
//! `G = (C M2 M1)(C M2 M1)ᵀ + (C M2 M2)(C M2 M2)ᵀ + 2kI` and `C` the
//! solution of `C (M1 + M2) + (M1 + M2)ᵀ C = -I`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Mat4};

/// Table I value of the scalar `k` in the delay bound.
pub const DEFAULT_K: f64 = 1.01;

/// Control gains `(a, b, â, b̂)` for followers 2 and 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlGains {
    pub a2: f64,
    pub b2: f64,
    pub a_hat2: f64,
    pub b_hat2: f64,
    pub a3: f64,
    pub b3: f64,
    pub a_hat3: f64,
    pub b_hat3: f64,
}

/// Gains of a single follower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerGains {
    pub a: f64,
    pub b: f64,
    pub a_hat: f64,
    pub b_hat: f64,
}

/// The two followers of the formation. The leader is UAV 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Follower {
    Two,
    Three,
}

impl Follower {
    pub fn peer(self) -> Follower {
        match self {
            Follower::Two => Follower::Three,
            Follower::Three => Follower::Two,
        }
    }
}

impl Default for ControlGains {
    fn default() -> Self {
        Self::uniform(FollowerGains { a: 1.0, b: 1.0, a_hat: 1.5, b_hat: 1.5 })
    }
}

impl ControlGains {
    pub fn uniform(g: FollowerGains) -> Self {
        Self { a2: g.a, b2: g.b, a_hat2: g.a_hat, b_hat2: g.b_hat, a3: g.a, b3: g.b, a_hat3: g.a_hat, b_hat3: g.b_hat }
    }

    pub fn follower(&self, f: Follower) -> FollowerGains {
        match f {
            Follower::Two => FollowerGains { a: self.a2, b: self.b2, a_hat: self.a_hat2, b_hat: self.b_hat2 },
            Follower::Three => FollowerGains { a: self.a3, b: self.b3, a_hat: self.a_hat3, b_hat: self.b_hat3 },
        }
    }

    fn named(&self) -> [(&'static str, f64); 8] {
        [
            ("a2", self.a2),
            ("b2", self.b2),
            ("a_hat2", self.a_hat2),
            ("b_hat2", self.b_hat2),
            ("a3", self.a3),
            ("b3", self.b3),
            ("a_hat3", self.a_hat3),
            ("b_hat3", self.b_hat3),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.named() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidGain { name, value });
            }
        }
        Ok(())
    }

    pub fn scale_b_hat(mut self, factor: f64) -> Self {
        self.b_hat2 *= factor;
        self.b_hat3 *= factor;
        self
    }
}

/// Which coefficient sits at `M1[3][0]`.
///
/// `Derived` (`-â3`) follows from substituting the control law into the
/// derivative of `z3` with `δ23 = δ13 - δ12`. `Printed` (`-a3`) reproduces the
/// matrix as typeset in the original derivation; it is kept for comparison
/// only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum M1Variant {
    #[default]
    Derived,
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemMatrices {
    pub m1: Mat4,
    pub m2: Mat4,
}

impl SystemMatrices {
    /// Wrap an arbitrary pair; no gain validation is applied.
    pub fn new(m1: Mat4, m2: Mat4) -> Self {
        Self { m1, m2 }
    }

    /// `M1 + M2`, the zero-delay system matrix.
    pub fn undelayed(&self) -> Mat4 {
        self.m1 + self.m2
    }

    pub fn is_hurwitz(&self) -> bool {
        linalg::is_hurwitz(&self.undelayed())
    }
}

pub fn build_error_matrices(gains: &ControlGains) -> Result<SystemMatrices> {
    build_error_matrices_with(gains, M1Variant::Derived)
}

pub fn build_error_matrices_with(gains: &ControlGains, variant: M1Variant) -> Result<SystemMatrices> {
    gains.validate()?;
    let g = gains;
    let m41 = match variant {
        M1Variant::Derived => -g.a_hat3,
        M1Variant::Printed => -g.a3,
    };
    #[rustfmt::skip]
    let m1 = Mat4::new(
        0.0,               0.0,              -1.0,                0.0,
        0.0,               0.0,               0.0,               -1.0,
        g.a2 + g.a_hat2,  -g.a_hat2,         -(g.b2 + g.b_hat2),  0.0,
        m41,               g.a3 + g.a_hat3,   0.0,               -(g.b3 + g.b_hat3),
    );
    let mut m2 = Mat4::zeros();
    m2[(2, 3)] = g.b_hat2;
    m2[(3, 2)] = g.b_hat3;
    Ok(SystemMatrices { m1, m2 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayBound {
    /// Lyapunov solution for `M1 + M2`.
    pub c: Mat4,
    pub lambda_max: f64,
    /// Seconds.
    pub tau_max: f64,
    pub k: f64,
    pub residual: f64,
}

pub fn delay_bound(mats: &SystemMatrices, k: f64) -> Result<DelayBound> {
    if !(k.is_finite() && k > 1.0) {
        return Err(invalid("k", format!("must be finite and > 1, got {k}")));
    }
    let a = mats.undelayed();
    let c = linalg::solve_lyapunov(&a)?;
    let residual = linalg::lyapunov_residual(&c, &a);

    let p = c * mats.m2 * mats.m1;
    let q = c * mats.m2 * mats.m2;
    let g = p * p.transpose() + q * q.transpose() + Mat4::identity() * (2.0 * k);
    // products of a matrix with its transpose are symmetric up to rounding
    let g = (g + g.transpose()) * 0.5;
    let lambda_max = linalg::max_eigenvalue_symmetric(&g)?;

    Ok(DelayBound { c, lambda_max, tau_max: 1.0 / lambda_max, k, residual })
}

/// Delay bound of the whole formation, `min(τx, τy)`.
///
/// The control law applies the same gains on both axes, so the x- and
/// y-axis error systems share `M1` and `M2` and `τx = τy`; the bound is
/// evaluated once.
pub fn formation_delay_bound(gains: &ControlGains, k: f64) -> Result<DelayBound> {
    delay_bound(&build_error_matrices(gains)?, k)
}

/// Maximum allowable transmission delay in seconds.
pub fn formation_delay_requirement(gains: &ControlGains, k: f64) -> Result<f64> {
    Ok(formation_delay_bound(gains, k)?.tau_max)
}
