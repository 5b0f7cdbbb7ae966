use std::f64::consts::PI;

use super::WirelessParams;
use crate::error::{invalid, Error, Result};
use crate::quadrature;

/// Relative tolerance of the numerical Laplace-transform path.
pub const LAPLACE_QUADRATURE_TOL: f64 = 1e-9;

fn check(n: f64, params: &WirelessParams) -> Result<()> {
    if !(params.alpha.is_finite() && params.alpha > 2.0) {
        return Err(Error::DivergentInterference(params.alpha));
    }
    if !(n >= 0.0 && n.is_finite()) {
        return Err(invalid("n", format!("must be finite and non-negative, got {n}")));
    }
    Ok(())
}

/// Laplace transform of the aggregate interference, `E[exp(-n I)]`, for a
/// planar PPP of Rayleigh-faded interferers:
///
/// ```text
/// L(n) = exp(-2πλ ∫₀^∞ (1 - 1/(1 + n P_t r^-α)) r dr)
///      = exp(-2π² λ s^(2/α) / (α sin(2π/α))),   s = n P_t
/// ```
pub fn interference_laplace(n: f64, params: &WirelessParams) -> Result<f64> {
    check(n, params)?;
    if n == 0.0 || params.density_lambda == 0.0 {
        return Ok(1.0);
    }
    let alpha = params.alpha;
    let s = n * params.p_t;
    let radial = s.powf(2.0 / alpha) * PI / (alpha * (2.0 * PI / alpha).sin());
    Ok((-2.0 * PI * params.density_lambda * radial).exp())
}

/// The same transform with the radial integral evaluated by adaptive
/// Gauss–Kronrod quadrature instead of its closed form.
///
/// The half-line is split at `r0 = s^(1/α)`. The outer piece is mapped onto
/// `(0, 1]` with `r = r0 w^(-1/(α-2))`, which turns the `r^(1-α)` tail into
/// a bounded integrand.
pub fn interference_laplace_quadrature(n: f64, params: &WirelessParams) -> Result<f64> {
    check(n, params)?;
    if n == 0.0 || params.density_lambda == 0.0 {
        return Ok(1.0);
    }
    let alpha = params.alpha;
    let s = n * params.p_t;
    let r0 = s.powf(1.0 / alpha);
    let q = 1.0 / (alpha - 2.0);

    // 1 - 1/(1 + s r^-α) = s / (r^α + s)
    let inner = quadrature::integrate(|r| s * r / (r.powf(alpha) + s), 0.0, r0, LAPLACE_QUADRATURE_TOL, 0.0, 4000)?;
    let r0_alpha = r0.powf(alpha);
    let outer = quadrature::integrate(
        |w| q * s * r0 * r0 / (r0_alpha + s * w.powf(q * alpha)),
        0.0,
        1.0,
        LAPLACE_QUADRATURE_TOL,
        0.0,
        4000,
    )?;
    Ok((-2.0 * PI * params.density_lambda * (inner.value + outer.value)).exp())
}
