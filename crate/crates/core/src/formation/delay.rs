use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FormationErrors;

/// Smallest delay emitted by the uniform process (seconds).
pub const MIN_DELAY: f64 = 1e-5;

/// One control period.
pub const DEFAULT_RESAMPLE_PERIOD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayKind {
    /// Always `tau_max`.
    Constant,
    /// Piecewise constant, redrawn uniformly on `[MIN_DELAY, tau_max]` every
    /// `resample_period`.
    UniformResampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayProcess {
    pub kind: DelayKind,
    pub tau_max: f64,
    pub resample_period: f64,
    pub seed: u64,
}

impl DelayProcess {
    pub fn constant(tau: f64) -> Self {
        Self { kind: DelayKind::Constant, tau_max: tau, resample_period: DEFAULT_RESAMPLE_PERIOD, seed: 0 }
    }

    /// No delay at all; the error system reduces to `ė = (M1 + M2) e`.
    pub fn none() -> Self {
        Self::constant(0.0)
    }

    pub fn uniform(tau_max: f64, resample_period: f64, seed: u64) -> Self {
        Self { kind: DelayKind::UniformResampled, tau_max, resample_period, seed }
    }

    pub fn sampler(&self) -> DelaySampler {
        DelaySampler { process: *self, rng: ChaCha8Rng::seed_from_u64(self.seed) }
    }
}

/// What the receiving follower gets at the start of a control period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayDraw {
    /// Peer velocity arrives with this delay (seconds).
    Delay(f64),
    /// Packet lost; keep using the last delayed value received.
    Lost,
}

pub struct DelayContext<'a> {
    pub t: f64,
    pub errors: &'a FormationErrors,
}

/// Supplies the peer-link delay once per control period.
pub trait DelaySource {
    fn draw(&mut self, ctx: &DelayContext<'_>) -> DelayDraw;

    /// Longest delay that may be drawn; sizes the history buffer.
    fn history_depth(&self) -> f64;

    fn resample_period(&self) -> f64;
}

pub struct DelaySampler {
    process: DelayProcess,
    rng: ChaCha8Rng,
}

impl DelaySource for DelaySampler {
    fn draw(&mut self, _ctx: &DelayContext<'_>) -> DelayDraw {
        let p = &self.process;
        let tau = match p.kind {
            DelayKind::UniformResampled if p.tau_max > MIN_DELAY => self.rng.random_range(MIN_DELAY..=p.tau_max),
            _ => p.tau_max,
        };
        DelayDraw::Delay(tau)
    }

    fn history_depth(&self) -> f64 {
        self.process.tau_max
    }

    fn resample_period(&self) -> f64 {
        self.process.resample_period
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(p: &DelayProcess, n: usize) -> Vec<f64> {
        let mut s = p.sampler();
        let e = FormationErrors::default();
        (0..n)
            .map(|i| match s.draw(&DelayContext { t: i as f64, errors: &e }) {
                DelayDraw::Delay(t) => t,
                DelayDraw::Lost => panic!("sampler never loses packets"),
            })
            .collect()
    }

    #[test]
    fn uniform_stays_in_range() {
        let p = DelayProcess::uniform(0.0182, 0.01, 3);
        for tau in draws(&p, 10_000) {
            assert!(tau > 0.0 && tau <= 0.0182);
            assert!(tau >= MIN_DELAY);
        }
    }

    #[test]
    fn seeded_draws_repeat() {
        let p = DelayProcess::uniform(0.0182, 0.01, 11);
        assert_eq!(draws(&p, 100), draws(&p, 100));
        let q = DelayProcess::uniform(0.0182, 0.01, 12);
        assert_ne!(draws(&p, 100), draws(&q, 100));
    }

    #[test]
    fn constant_is_constant() {
        assert!(draws(&DelayProcess::constant(0.004), 10).iter().all(|&t| t == 0.004));
    }
}
