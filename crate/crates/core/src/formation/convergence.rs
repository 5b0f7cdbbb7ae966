use serde::{Deserialize, Serialize};

use super::integrate::{RunStatus, Trajectory};
use crate::error::{invalid, Result};
use crate::linalg::Mat4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    /// Start of the first window of length `hold_window` over which every
    /// error stays below `eps`.
    pub settle_time: Option<f64>,
    /// Peak absolute error over the run.
    pub max_overshoot: f64,
    pub status: RunStatus,
}

pub fn convergence_metrics(traj: &Trajectory, eps: f64, hold_window: f64) -> Result<ConvergenceReport> {
    if traj.is_empty() {
        return Err(invalid("trajectory", "empty"));
    }
    if !(eps > 0.0) {
        return Err(invalid("eps", format!("must be positive, got {eps}")));
    }
    if !(hold_window >= 0.0) {
        return Err(invalid("hold_window", format!("must be non-negative, got {hold_window}")));
    }

    let max_overshoot = traj.samples.iter().map(|s| s.errors.max_abs()).fold(0.0, f64::max);
    let hold_steps = (hold_window / traj.step - 1e-9).ceil().max(0.0) as usize;

    let mut settle_time = None;
    let mut run_start: Option<usize> = None;
    if traj.status == RunStatus::Completed {
        for (i, s) in traj.samples.iter().enumerate() {
            if s.errors.max_abs() < eps {
                let start = *run_start.get_or_insert(i);
                if i - start >= hold_steps {
                    settle_time = Some(traj.time(start));
                    break;
                }
            } else {
                run_start = None;
            }
        }
    }

    Ok(ConvergenceReport { converged: settle_time.is_some(), settle_time, max_overshoot, status: traj.status })
}

/// `V = exᵀ C ex + eyᵀ C ey` at every sample.
pub fn lyapunov_values(traj: &Trajectory, c: &Mat4) -> Vec<f64> {
    traj.samples
        .iter()
        .map(|s| {
            let (x, y) = (&s.errors.x, &s.errors.y);
            (x.transpose() * c * x)[0] + (y.transpose() * c * y)[0]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formation::{ErrorVector, FormationErrors, TrajectorySample};

    fn traj(values: &[f64], step: f64) -> Trajectory {
        Trajectory {
            step,
            horizon: step * (values.len() - 1) as f64,
            scenario_hash: 0,
            samples: values
                .iter()
                .map(|&v| TrajectorySample {
                    errors: FormationErrors { x: ErrorVector::new(v, 0.0, 0.0, 0.0), y: ErrorVector::zeros() },
                    tau: 0.0,
                })
                .collect(),
            status: RunStatus::Completed,
        }
    }

    #[test]
    fn zero_trajectory_settles_immediately() {
        let r = convergence_metrics(&traj(&[0.0; 50], 0.1), 1e-2, 2.0).unwrap();
        assert!(r.converged);
        assert_eq!(r.settle_time, Some(0.0));
        assert_eq!(r.max_overshoot, 0.0);
    }

    #[test]
    fn settle_after_last_excursion() {
        let mut v = vec![0.0; 60];
        v[0] = 3.0;
        v[10] = -0.5; // brief excursion breaks the first run
        let r = convergence_metrics(&traj(&v, 0.1), 1e-2, 2.0).unwrap();
        assert!(r.converged);
        assert!((r.settle_time.unwrap() - 1.1).abs() < 1e-12);
        assert_eq!(r.max_overshoot, 3.0);
    }

    #[test]
    fn window_longer_than_run_fails() {
        let r = convergence_metrics(&traj(&[0.0; 10], 0.1), 1e-2, 2.0).unwrap();
        assert!(!r.converged);
        assert_eq!(r.settle_time, None);
    }

    #[test]
    fn diverged_never_converges() {
        let mut t = traj(&[0.0; 50], 0.1);
        t.status = RunStatus::Diverged;
        assert!(!convergence_metrics(&t, 1e-2, 0.5).unwrap().converged);
    }

    #[test]
    fn rejects_empty_and_bad_eps() {
        let mut t = traj(&[0.0], 0.1);
        assert!(convergence_metrics(&t, 0.0, 1.0).is_err());
        t.samples.clear();
        assert!(convergence_metrics(&t, 1e-2, 1.0).is_err());
    }
}
