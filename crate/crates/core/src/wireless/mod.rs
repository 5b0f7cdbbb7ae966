//! Intra-swarm link model: Nakagami-faded desired signal, Rayleigh-faded
//! interferers scattered as a planar Poisson point process, and the
//! probability that the per-packet transmission delay meets the control
//! deadline.

mod laplace;
mod montecarlo;
mod reliability;

pub use laplace::{interference_laplace, interference_laplace_quadrature, LAPLACE_QUADRATURE_TOL};
pub use montecarlo::{
    mc_reliability, mean_interference, sample_interference, sample_interference_nearest, wilson_halfwidth,
    InterferenceField, McOptions, SuccessTest, MIN_MC_TRIALS,
};
pub use reliability::{link_reliability, max_spacing_for_reliability};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WirelessParams {
    /// Nakagami shape parameter of the desired link.
    pub beta: u32,
    /// Path loss exponent.
    pub alpha: f64,
    /// Interferers per m².
    pub density_lambda: f64,
    /// Transmit power, W.
    pub p_t: f64,
    /// Noise power spectral density, W/Hz.
    pub noise_psd: f64,
    /// Hz.
    pub bandwidth_omega: f64,
    /// Packet size, bits.
    pub packet_bits_s: f64,
}

impl Default for WirelessParams {
    fn default() -> Self {
        Self {
            beta: 3,
            alpha: 3.0,
            density_lambda: 0.05,
            p_t: dbm_to_watts(20.0),
            noise_psd: dbm_to_watts(-174.0),
            bandwidth_omega: 20e6,
            packet_bits_s: 3200.0,
        }
    }
}

impl WirelessParams {
    pub fn with_density(mut self, density: f64) -> Self {
        self.density_lambda = density;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta < 1 {
            return Err(invalid("beta", "must be a positive integer"));
        }
        if !(self.alpha.is_finite() && self.alpha > 2.0) {
            return Err(Error::DivergentInterference(self.alpha));
        }
        let positive =
            [("p_t", self.p_t), ("bandwidth_omega", self.bandwidth_omega), ("packet_bits_s", self.packet_bits_s)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be finite and positive, got {v}")));
            }
        }
        for (name, v) in [("density_lambda", self.density_lambda), ("noise_psd", self.noise_psd)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// `η = β (β!)^(-1/β)`.
    pub fn eta(&self) -> f64 {
        let beta = self.beta as f64;
        let factorial: f64 = (1..=self.beta).map(f64::from).product();
        beta * factorial.powf(-1.0 / beta)
    }

    /// Thermal noise over the whole bandwidth, W.
    pub fn noise_power(&self) -> f64 {
        self.noise_psd * self.bandwidth_omega
    }
}

/// Transmission delay `S / (ω log2(1 + SINR))` in seconds; infinite when the
/// SINR is zero (the packet never gets through).
pub fn link_delay(sinr: f64, params: &WirelessParams) -> f64 {
    if !(sinr > 0.0) {
        return f64::INFINITY;
    }
    let bits_per_hz = sinr.ln_1p() / std::f64::consts::LN_2;
    params.packet_bits_s / (params.bandwidth_omega * bits_per_hz)
}

/// SINR needed to deliver a packet within `required_delay`:
/// `2^(S / (ω τ)) - 1`.
pub fn sinr_threshold(required_delay: f64, params: &WirelessParams) -> Result<f64> {
    if !(required_delay > 0.0) {
        return Err(invalid("required_delay", format!("must be positive, got {required_delay}")));
    }
    let exponent = params.packet_bits_s / (params.bandwidth_omega * required_delay);
    Ok((exponent * std::f64::consts::LN_2).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Transmitter–receiver distance, m.
    pub distance_d: f64,
    pub sinr_threshold: f64,
    /// Seconds.
    pub required_delay: f64,
}

impl LinkBudget {
    pub fn from_required_delay(distance: f64, required_delay: f64, params: &WirelessParams) -> Result<Self> {
        if !(distance.is_finite() && distance > 0.0) {
            return Err(invalid("distance_d", format!("must be finite and positive, got {distance}")));
        }
        Ok(Self { distance_d: distance, sinr_threshold: sinr_threshold(required_delay, params)?, required_delay })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityEstimate {
    pub value: f64,
    pub method: EstimateMethod,
    pub trials: Option<u64>,
    pub ci_halfwidth_95: Option<f64>,
}
