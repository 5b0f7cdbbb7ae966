use super::{interference_laplace, sinr_threshold, EstimateMethod, LinkBudget, ReliabilityEstimate, WirelessParams};
use crate::error::{invalid, Result};

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Probability that the link delivers a packet within the budget's deadline.
///
/// The Nakagami-β fading CDF is replaced by `(1 - e^(-ηx))^β`, which turns
/// the success probability into a finite alternating sum of noise terms and
/// interference Laplace transforms:
///
/// ```text
/// Σ_{k=1..β} (-1)^(k+1) C(β,k) exp(-k η θ σ² / P_t) L(k η θ / P_t),   θ = γ_th d^α
/// ```
///
/// `θ` is the fading gain the desired link needs: the SINR threshold divided
/// by the path gain `d^-α`.
pub fn link_reliability(budget: &LinkBudget, params: &WirelessParams) -> Result<ReliabilityEstimate> {
    params.validate()?;
    if !(budget.distance_d.is_finite() && budget.distance_d > 0.0) {
        return Err(invalid("distance_d", format!("must be finite and positive, got {}", budget.distance_d)));
    }
    if !(budget.sinr_threshold.is_finite() && budget.sinr_threshold >= 0.0) {
        return Err(invalid(
            "sinr_threshold",
            format!("must be finite and non-negative, got {}", budget.sinr_threshold),
        ));
    }

    let eta = params.eta();
    let theta = budget.sinr_threshold * budget.distance_d.powf(params.alpha);
    let noise = params.noise_power();

    let mut total = 0.0;
    for k in 1..=params.beta {
        let n = f64::from(k) * eta * theta / params.p_t;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * binomial(params.beta, k) * (-n * noise).exp() * interference_laplace(n, params)?;
    }

    Ok(ReliabilityEstimate {
        value: total.clamp(0.0, 1.0),
        method: EstimateMethod::Analytic,
        trials: None,
        ci_halfwidth_95: None,
    })
}

/// Largest spacing in `[lo, hi]` whose analytic reliability still reaches
/// `target`, by bisection on the monotone reliability curve. `None` if even
/// `lo` misses the target; `hi` if the whole range meets it.
pub fn max_spacing_for_reliability(
    target: f64,
    required_delay: f64,
    params: &WirelessParams,
    lo: f64,
    hi: f64,
) -> Result<Option<f64>> {
    let gamma = sinr_threshold(required_delay, params)?;
    let at = |d: f64| -> Result<f64> {
        let budget = LinkBudget { distance_d: d, sinr_threshold: gamma, required_delay };
        Ok(link_reliability(&budget, params)?.value)
    };
    if at(lo)? < target {
        return Ok(None);
    }
    if at(hi)? >= target {
        return Ok(Some(hi));
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > 1e-10 * b {
        let mid = 0.5 * (a + b);
        if at(mid)? >= target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(Some(a))
}
