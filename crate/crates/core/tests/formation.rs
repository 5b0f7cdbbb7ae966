use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarm_core::formation::{
    compute_errors, control_acceleration, convergence_metrics, error_dynamics_rhs, integrate_dde,
    integrate_error_system, lyapunov_values, reconstruct_state, sense_spacings, DelayProcess, ErrorVector,
    FormationErrors, FormationTargets, RunStatus, SwarmState, UavState,
};
use swarm_core::linalg;
use swarm_core::stability::{build_error_matrices, ControlGains, Follower, SystemMatrices};

const STEP: f64 = 5e-4;

fn random_errors(rng: &mut ChaCha8Rng, spread: f64) -> FormationErrors {
    let mut draw = || ErrorVector::from_fn(|_, _| rng.random_range(-spread..=spread));
    FormationErrors { x: draw(), y: draw() }
}

fn uav() -> impl Strategy<Value = UavState> {
    (-100.0f64..100.0, -100.0f64..100.0, -10.0f64..10.0, -10.0f64..10.0).prop_map(|(x, y, vx, vy)| UavState {
        x,
        y,
        vx,
        vy,
    })
}

fn targets() -> impl Strategy<Value = FormationTargets> {
    prop::array::uniform6(-10.0f64..10.0).prop_map(|v| FormationTargets {
        x_bar_12: v[0],
        x_bar_13: v[1],
        y_bar_12: v[2],
        y_bar_13: v[3],
        v_bar_x: v[4],
        v_bar_y: v[5],
    })
}

proptest! {
    #[test]
    fn errors_round_trip_through_positions(
        f2 in uav(), f3 in uav(), x1 in -100.0f64..100.0, y1 in -100.0f64..100.0, t in targets(),
    ) {
        let leader = UavState { x: x1, y: y1, vx: t.v_bar_x, vy: t.v_bar_y };
        let state = SwarmState { t: 0.0, uavs: [leader, f2, f3] };
        let e = compute_errors(&state, &t);
        let back = reconstruct_state(0.0, x1, y1, &e, &t);
        for (a, b) in back.uavs.iter().zip(state.uavs.iter()) {
            prop_assert!((a.x - b.x).abs() < 1e-12 * (1.0 + b.x.abs()) * 100.0);
            prop_assert!((a.y - b.y).abs() < 1e-12 * (1.0 + b.y.abs()) * 100.0);
            prop_assert!((a.vx - b.vx).abs() < 1e-13 * 100.0);
            prop_assert!((a.vy - b.vy).abs() < 1e-13 * 100.0);
        }
    }

    #[test]
    fn peer_spacing_error_is_difference_of_leader_errors(
        f2 in uav(), f3 in uav(), x1 in -100.0f64..100.0, y1 in -100.0f64..100.0, t in targets(),
    ) {
        let leader = UavState { x: x1, y: y1, vx: t.v_bar_x, vy: t.v_bar_y };
        let state = SwarmState { t: 0.0, uavs: [leader, f2, f3] };
        let e = compute_errors(&state, &t);
        // x2 - x3 - x̄23 == δ13 - δ12
        let direct = f2.x - f3.x - t.x_bar_23();
        prop_assert!((direct - (e.x[1] - e.x[0])).abs() < 1e-10);
        let direct_y = f2.y - f3.y - t.y_bar_23();
        prop_assert!((direct_y - (e.y[1] - e.y[0])).abs() < 1e-10);
    }

    /// Follower accelerations from the raw control law, with the peer
    /// velocity taken from a delayed state, equal the delayed error system.
    #[test]
    fn control_law_matches_error_system(
        now in prop::array::uniform8(-5.0f64..5.0),
        past in prop::array::uniform8(-5.0f64..5.0),
        t in targets(),
    ) {
        let g = ControlGains::default();
        let mats = build_error_matrices(&g).unwrap();
        let e = FormationErrors {
            x: ErrorVector::new(now[0], now[1], now[2], now[3]),
            y: ErrorVector::new(now[4], now[5], now[6], now[7]),
        };
        let ed = FormationErrors {
            x: ErrorVector::new(past[0], past[1], past[2], past[3]),
            y: ErrorVector::new(past[4], past[5], past[6], past[7]),
        };
        let state = reconstruct_state(0.0, 1.0, -2.0, &e, &t);
        let delayed = reconstruct_state(0.0, 1.0, -2.0, &ed, &t);
        let rhs_x = error_dynamics_rhs(&e.x, &ed.x, &mats);
        let rhs_y = error_dynamics_rhs(&e.y, &ed.y, &mats);

        for (f, row) in [(Follower::Two, 2), (Follower::Three, 3)] {
            let own = state.follower(f);
            let peer_past = delayed.follower(f.peer());
            let leader = state.leader();
            let u = control_acceleration(
                f,
                [own.vx, own.vy],
                [leader.vx, leader.vy],
                [peer_past.vx, peer_past.vy],
                &sense_spacings(&state, &t, f),
                &g,
            );
            // leader velocity is constant, so ż_i is the follower acceleration
            prop_assert!((u[0] - rhs_x[row]).abs() < 1e-9, "{} vs {}", u[0], rhs_x[row]);
            prop_assert!((u[1] - rhs_y[row]).abs() < 1e-9);
        }
    }
}

#[test]
fn equilibrium_stays_put() {
    let t = FormationTargets::default();
    let s = SwarmState::in_formation(&t, 0.0, 0.0);
    for d in [DelayProcess::none(), DelayProcess::constant(0.0182), DelayProcess::uniform(0.0182, 0.01, 4)] {
        let traj = integrate_dde(&s, &t, &ControlGains::default(), &d, STEP, 5.0).unwrap();
        assert!(traj.samples.iter().all(|s| s.errors.max_abs() == 0.0));
        let r = convergence_metrics(&traj, 1e-2, 2.0).unwrap();
        assert!(r.converged);
        assert_eq!(r.settle_time, Some(0.0));
    }
}

#[test]
fn zero_delay_lyapunov_decrease_and_convergence() {
    let g = ControlGains::default();
    let mats = build_error_matrices(&g).unwrap();
    let c = linalg::solve_lyapunov(&mats.undelayed()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..5 {
        let e0 = random_errors(&mut rng, 5.0);
        let traj = integrate_error_system(&mats, e0, &mut DelayProcess::none().sampler(), STEP, 30.0).unwrap();
        let v = lyapunov_values(&traj, &c);
        for w in v.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
        let r = convergence_metrics(&traj, 1e-2, 2.0).unwrap();
        assert!(r.converged);
        assert!(r.settle_time.unwrap() < 25.0);
    }
}

#[test]
fn delayed_runs_converge() {
    let t = FormationTargets::default();
    let g = ControlGains::default();
    for seed in 0..10 {
        let s = SwarmState::perturbed(&t, 5.0, 2.0, seed);
        let d = DelayProcess::uniform(0.0182, 0.01, seed);
        let traj = integrate_dde(&s, &t, &g, &d, STEP, 60.0).unwrap();
        let r = convergence_metrics(&traj, 1e-2, 2.0).unwrap();
        assert!(r.converged, "seed {seed}");
        assert!(traj.samples.iter().all(|s| s.tau > 0.0 && s.tau <= 0.0182));
    }
}

#[test]
fn step_halving_changes_little() {
    let t = FormationTargets::default();
    let g = ControlGains::default();
    let s = SwarmState::perturbed(&t, 5.0, 2.0, 17);
    for d in [DelayProcess::none(), DelayProcess::constant(0.01), DelayProcess::uniform(0.0182, 0.01, 17)] {
        let coarse = integrate_dde(&s, &t, &g, &d, 5e-4, 10.0).unwrap();
        let fine = integrate_dde(&s, &t, &g, &d, 2.5e-4, 10.0).unwrap();
        let a = coarse.last().unwrap().errors;
        let b = fine.last().unwrap().errors;
        let diff = (a.x - b.x).amax().max((a.y - b.y).amax());
        assert!(diff < 1e-6, "{d:?}: {diff}");
    }
}

#[test]
fn seeded_runs_are_bit_identical() {
    let t = FormationTargets::default();
    let g = ControlGains::default();
    let s = SwarmState::perturbed(&t, 5.0, 2.0, 3);
    let d = DelayProcess::uniform(0.0182, 0.01, 3);
    let a = integrate_dde(&s, &t, &g, &d, STEP, 5.0).unwrap();
    let b = integrate_dde(&s, &t, &g, &d, STEP, 5.0).unwrap();
    assert_eq!(a.scenario_hash, b.scenario_hash);
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert_eq!(x.errors.x.map(f64::to_bits), y.errors.x.map(f64::to_bits));
        assert_eq!(x.errors.y.map(f64::to_bits), y.errors.y.map(f64::to_bits));
        assert_eq!(x.tau.to_bits(), y.tau.to_bits());
    }
    let other = integrate_dde(&s, &t, &g, &DelayProcess::uniform(0.0182, 0.01, 4), STEP, 5.0).unwrap();
    assert_ne!(a.scenario_hash, other.scenario_hash);
}

#[test]
fn negated_gains_diverge() {
    let base = build_error_matrices(&ControlGains::default()).unwrap();
    let mut m1 = base.m1;
    for j in 0..4 {
        m1[(2, j)] = -m1[(2, j)];
        m1[(3, j)] = -m1[(3, j)];
    }
    let mats = SystemMatrices::new(m1, -base.m2);
    assert!(!mats.is_hurwitz());
    let e0 = FormationErrors { x: ErrorVector::new(1.0, -1.0, 0.5, 0.0), y: ErrorVector::new(0.0, 2.0, 0.0, -0.5) };
    let traj = integrate_error_system(&mats, e0, &mut DelayProcess::constant(0.0182).sampler(), STEP, 60.0).unwrap();
    assert_eq!(traj.status, RunStatus::Diverged);
    assert!(traj.len() < 120_001);
    let r = convergence_metrics(&traj, 1e-2, 2.0).unwrap();
    assert!(!r.converged);
    assert_eq!(r.status, RunStatus::Diverged);
}
