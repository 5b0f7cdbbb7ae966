use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{link_delay, EstimateMethod, LinkBudget, ReliabilityEstimate, WirelessParams};
use crate::error::{invalid, Result};

pub const MIN_MC_TRIALS: u64 = 10_000;

/// Trials per RNG stream. Streams are keyed by chunk index, so the estimate
/// does not depend on how chunks are spread over threads.
const CHUNK_TRIALS: u64 = 8_192;

const Z95: f64 = 1.959_963_984_540_054;

/// Disc of interferers centred on the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceField {
    /// Outer radius, m.
    pub radius: f64,
    /// No interferer closer than this, m. Zero reproduces the unbounded
    /// integral of the analytic model.
    pub exclusion_radius: f64,
}

impl Default for InterferenceField {
    fn default() -> Self {
        Self { radius: 2000.0, exclusion_radius: 0.0 }
    }
}

impl InterferenceField {
    fn validate(&self) -> Result<()> {
        if !(self.exclusion_radius >= 0.0 && self.radius > self.exclusion_radius && self.radius.is_finite()) {
            return Err(invalid(
                "field",
                format!("need 0 <= exclusion_radius < radius, got {} and {}", self.exclusion_radius, self.radius),
            ));
        }
        Ok(())
    }
}

/// Mean interference power over the field by Campbell's formula,
/// `2πλ P_t ∫ r^(1-α) dr`. Infinite without an exclusion zone.
pub fn mean_interference(params: &WirelessParams, field: &InterferenceField) -> f64 {
    if params.density_lambda == 0.0 {
        return 0.0;
    }
    annulus_mean(params, field.exclusion_radius, field.radius)
}

fn annulus_mean(params: &WirelessParams, inner: f64, outer: f64) -> f64 {
    let e = 2.0 - params.alpha;
    2.0 * PI * params.density_lambda * params.p_t * (inner.powf(e) - outer.powf(e)) / (params.alpha - 2.0)
}

/// One draw of the aggregate interference at the receiver: a Poisson number
/// of interferers placed uniformly on the field, each with unit-mean
/// exponential power fading.
pub fn sample_interference<R: Rng + ?Sized>(params: &WirelessParams, field: &InterferenceField, rng: &mut R) -> f64 {
    let inner2 = field.exclusion_radius * field.exclusion_radius;
    let outer2 = field.radius * field.radius;
    let mean_count = params.density_lambda * PI * (outer2 - inner2);
    if !(mean_count > 0.0) {
        return 0.0;
    }
    let count: f64 = Poisson::new(mean_count).expect("positive finite mean").sample(rng);
    let half_alpha = 0.5 * params.alpha;
    let mut total = 0.0;
    for _ in 0..count as u64 {
        let r2 = inner2 + rng.random::<f64>() * (outer2 - inner2);
        let fading: f64 = Exp1.sample(rng);
        total += fading * r2.powf(-half_alpha);
    }
    params.p_t * total
}

/// Interference draw that keeps the `near_count` closest interferers exact
/// and replaces the rest of the field by its conditional mean.
///
/// Squared distances of a planar PPP, ordered, are the arrival times of a
/// rate-`πλ` Poisson process, so the nearest points are generated
/// directly. Given the farthest kept point at `r_K`, the remainder is a PPP
/// on `(r_K, R)` whose contribution is replaced by its Campbell mean. When
/// fewer than `near_count` points fall inside the field the draw is exact.
pub fn sample_interference_nearest<R: Rng + ?Sized>(
    params: &WirelessParams,
    field: &InterferenceField,
    near_count: usize,
    rng: &mut R,
) -> f64 {
    if params.density_lambda == 0.0 {
        return 0.0;
    }
    let rate = PI * params.density_lambda;
    let inner2 = field.exclusion_radius * field.exclusion_radius;
    let outer2 = field.radius * field.radius;
    let half_alpha = 0.5 * params.alpha;

    let mut arrival = 0.0;
    let mut total = 0.0;
    let mut last_r2 = inner2;
    for _ in 0..near_count {
        let gap: f64 = Exp1.sample(rng);
        arrival += gap;
        let r2 = inner2 + arrival / rate;
        if r2 > outer2 {
            return params.p_t * total;
        }
        let fading: f64 = Exp1.sample(rng);
        total += fading * r2.powf(-half_alpha);
        last_r2 = r2;
    }
    params.p_t * total + annulus_mean(params, last_r2.sqrt(), field.radius)
}

/// How a Monte Carlo trial decides success.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuccessTest {
    /// Transmission delay within the required delay.
    #[default]
    Delay,
    /// SINR at or above the threshold.
    SinrThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub field: InterferenceField,
    /// Interferers sampled individually per trial; see
    /// [`sample_interference_nearest`].
    pub near_count: usize,
    pub test: SuccessTest,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { field: InterferenceField::default(), near_count: 64, test: SuccessTest::Delay }
    }
}

/// Half-width of the 95% Wilson score interval.
pub fn wilson_halfwidth(successes: u64, trials: u64) -> f64 {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// Monte Carlo estimate of the link reliability with exact Nakagami
/// (Gamma, unit mean) signal fading.
pub fn mc_reliability(
    budget: &LinkBudget,
    params: &WirelessParams,
    trials: u64,
    seed: u64,
    options: &McOptions,
) -> Result<ReliabilityEstimate> {
    params.validate()?;
    options.field.validate()?;
    if trials < MIN_MC_TRIALS {
        return Err(invalid("trials", format!("need at least {MIN_MC_TRIALS}, got {trials}")));
    }
    if options.near_count == 0 {
        return Err(invalid("near_count", "must be at least 1"));
    }

    let beta = f64::from(params.beta);
    let signal = Gamma::new(beta, 1.0 / beta).expect("beta >= 1");
    let path_gain = budget.distance_d.powf(-params.alpha);
    let noise = params.noise_power();
    let chunks = trials.div_ceil(CHUNK_TRIALS);

    let successes: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let count = CHUNK_TRIALS.min(trials - chunk * CHUNK_TRIALS);
            let mut ok = 0u64;
            for _ in 0..count {
                let h = signal.sample(&mut rng);
                let interference = sample_interference_nearest(params, &options.field, options.near_count, &mut rng);
                let sinr = params.p_t * h * path_gain / (noise + interference);
                let success = match options.test {
                    SuccessTest::Delay => link_delay(sinr, params) <= budget.required_delay,
                    SuccessTest::SinrThreshold => sinr >= budget.sinr_threshold,
                };
                ok += success as u64;
            }
            ok
        })
        .sum();

    Ok(ReliabilityEstimate {
        value: successes as f64 / trials as f64,
        method: EstimateMethod::MonteCarlo,
        trials: Some(trials),
        ci_halfwidth_95: Some(wilson_halfwidth(successes, trials)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_field() {
        let p = WirelessParams::default().with_density(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_interference(&p, &InterferenceField::default(), &mut rng), 0.0);
        assert_eq!(sample_interference_nearest(&p, &InterferenceField::default(), 8, &mut rng), 0.0);
        assert_eq!(mean_interference(&p, &InterferenceField::default()), 0.0);
    }

    #[test]
    fn same_seed_same_draw() {
        let p = WirelessParams::default();
        let f = InterferenceField { radius: 100.0, exclusion_radius: 0.0 };
        let a = sample_interference(&p, &f, &mut ChaCha8Rng::seed_from_u64(5));
        let b = sample_interference(&p, &f, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
        assert!(a > 0.0);
    }

    #[test]
    fn unbounded_mean_without_exclusion() {
        assert!(mean_interference(&WirelessParams::default(), &InterferenceField::default()).is_infinite());
    }

    #[test]
    fn wilson_is_sane() {
        let w = wilson_halfwidth(900_000, 1_000_000);
        assert!((w - Z95 * (0.09f64 / 1e6).sqrt()).abs() < 1e-6);
        assert!(wilson_halfwidth(10_000, 10_000) > 0.0);
    }

    #[test]
    fn rejects_small_runs() {
        let p = WirelessParams::default();
        let b = LinkBudget::from_required_delay(4.0, 0.0182, &p).unwrap();
        assert!(mc_reliability(&b, &p, 9_999, 1, &McOptions::default()).is_err());
    }

    #[test]
    fn interference_free_link_always_succeeds() {
        let p = WirelessParams::default().with_density(0.0);
        let b = LinkBudget::from_required_delay(4.0, 0.0182, &p).unwrap();
        let e = mc_reliability(&b, &p, 20_000, 3, &McOptions::default()).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.method, EstimateMethod::MonteCarlo);
        assert_eq!(e.trials, Some(20_000));
    }
}
