use std::f64::consts::{FRAC_PI_2, PI, TAU};

use kuramoto_lab::dynamics::{
    apply_perturbation, init_random, init_twisted, instantaneous_frequency, simulate, Integration, PerturbationKind,
    PerturbationSpec, PhaseState, Provenance, Trajectory,
};
use kuramoto_lab::observables::order_parameter;
use kuramoto_lab::real::circular_difference;
use kuramoto_lab::topology::{build_complete, build_power_law, build_ring};
use proptest::prelude::*;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// δ(t) for δ̇ = −2ε sin δ, from tan(δ/2) = tan(δ0/2)·e^{−2εt}.
fn pair_difference(delta0: f64, eps: f64, t: f64) -> f64 {
    2.0 * ((delta0 / 2.0).tan() * (-2.0 * eps * t).exp()).atan()
}

fn pair_error(dt: f64, delta0: f64) -> f64 {
    let a = build_complete::<f64>(2).unwrap();
    let run = Integration { horizon: 2.0, dt, dt_out: 0.1 };
    let traj = simulate(&a, 1.0, 0.0, &PhaseState::new(vec![0.0, delta0]), run, None).unwrap();
    traj.sample_times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| circular_difference(s[1] - s[0], pair_difference(delta0, 1.0, t)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn rk4_is_fourth_order_on_the_pair_oracle() {
    for delta0 in [1.0, 2.5, 3.0] {
        let ratio = pair_error(0.1, delta0) / pair_error(0.05, delta0);
        assert!((12.0..=20.0).contains(&ratio), "delta0={delta0}: ratio {ratio}");
    }
}

#[test]
fn pair_matches_closed_form_at_default_step() {
    assert!(pair_error(1e-3, 2.0) < 1e-8);
}

#[test]
fn twisted_state_is_an_equilibrium() {
    let ring = build_ring::<f64>(100, 1).unwrap();
    let s0 = init_twisted::<f64>(100, 1).unwrap();
    for eps in [1.0, 253.4] {
        let run = Integration { horizon: 10.0, dt: 1e-3, dt_out: 0.1 };
        let traj = simulate(&ring, eps, 0.0, &s0, run, None).unwrap();
        let drift = traj
            .states
            .iter()
            .flat_map(|s| s.iter().zip(&s0.phases).map(|(a, b)| circular_difference(*a, *b).abs()))
            .fold(0.0, f64::max);
        assert!(drift < 1e-9, "eps={eps}: drift {drift:e}");
    }
    assert!(instantaneous_frequency(&s0, &ring, 1.0, 0.0).iter().all(|f| f.abs() < 1e-12));
}

#[test]
fn complete_graph_synchronizes() {
    let a = build_complete::<f64>(50).unwrap();
    let traj = simulate(&a, 0.02, 0.0, &init_random(50, 1), Integration::default(), None).unwrap();
    assert!(order_parameter(&traj.last_state().phases) > 0.99);
}

#[test]
fn rotating_frame_equivariance() {
    let a = build_power_law::<f64>(20, 0.8).unwrap();
    let omega = 0.7;
    let run = Integration { horizon: 3.0, dt: 1e-3, dt_out: 0.05 };
    let still = simulate(&a, 0.5, 0.4, &init_random(20, 3), run, None).unwrap();
    let turning = simulate(&a, 0.5, 0.4, &init_random(20, 3).with_omega(omega), run, None).unwrap();
    for ((t, s), r) in still.sample_times.iter().zip(&still.states).zip(&turning.states) {
        for (a, b) in s.iter().zip(r) {
            assert!(circular_difference(b - omega * t, *a).abs() < 1e-10);
        }
    }
}

fn short_run() -> Integration {
    Integration { horizon: 1.0, dt: 1e-3, dt_out: 0.1 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn phase_shift_equivariance(seed in any::<u64>(), c in -PI..PI, phi in 0.0f64..FRAC_PI_2) {
        let a = build_power_law::<f64>(16, 1.0).unwrap();
        let s0 = init_random::<f64>(16, seed);
        let shifted = PhaseState::new(s0.phases.iter().map(|p| p + c).collect());
        let x = simulate(&a, 1.0, phi, &s0, short_run(), None).unwrap();
        let y = simulate(&a, 1.0, phi, &shifted, short_run(), None).unwrap();
        for (s, r) in x.states.iter().zip(&y.states) {
            for (p, q) in s.iter().zip(r) {
                prop_assert!(circular_difference(*q, p + c).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ring_rotation_commutes_with_simulation(seed in any::<u64>(), shift in 1usize..16, k in 1usize..6) {
        let n = 16;
        let a = build_ring::<f64>(n, k).unwrap();
        let s0 = init_random::<f64>(n, seed);
        let rotated = PhaseState::new((0..n).map(|i| s0.phases[(i + shift) % n]).collect());
        let x = simulate(&a, 0.8, 0.3, &s0, short_run(), None).unwrap();
        let y = simulate(&a, 0.8, 0.3, &rotated, short_run(), None).unwrap();
        for (s, r) in x.states.iter().zip(&y.states) {
            for i in 0..n {
                prop_assert!(circular_difference(r[i], s[(i + shift) % n]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sparse_and_dense_fields_agree(seed in any::<u64>()) {
        // a k=1 ring goes through the sparse path; the same weights with one extra tiny edge per row do not
        let n = 12;
        let ring = build_ring::<f64>(n, 1).unwrap();
        let mut rows = ring.to_dense();
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, w) in row.iter_mut().enumerate() {
                if i != j && *w == 0.0 {
                    *w = 1e-300;
                }
            }
        }
        let dense = kuramoto_lab::topology::CouplingMatrix::from_dense(rows).unwrap();
        let s0 = init_random::<f64>(n, seed);
        let f = instantaneous_frequency(&s0, &ring, 1.0, 0.2);
        let g = instantaneous_frequency(&s0, &dense, 1.0, 0.2);
        for (p, q) in f.iter().zip(&g) {
            prop_assert!((p - q).abs() < 1e-14);
        }
    }
}

#[test]
fn init_random_contract() {
    assert_eq!(init_random::<f64>(50, 1), init_random::<f64>(50, 1));
    assert_ne!(init_random::<f64>(50, 1), init_random::<f64>(50, 2));
    let big = init_random::<f64>(10_000, 9);
    assert!(order_parameter(&big.phases) < 0.05);
    let one = init_random::<f64>(1, 4);
    assert!((-PI..=PI).contains(&one.phases[0]));
}

#[test]
fn init_twisted_examples() {
    assert_eq!(init_twisted::<f64>(4, 0).unwrap().phases, vec![0.0; 4]);
    let quarter = init_twisted::<f64>(4, 1).unwrap().wrapped();
    for (p, e) in quarter.iter().zip([0.0, FRAC_PI_2, PI, -FRAC_PI_2]) {
        assert!(circular_difference(*p, e).abs() < 1e-15);
    }
    let wave = init_twisted::<f64>(100, 1).unwrap();
    for (j, p) in wave.phases.iter().enumerate() {
        let fourier = (TAU * j as f64 / 100.0).sin().atan2((TAU * j as f64 / 100.0).cos());
        assert!(circular_difference(*p, fourier).abs() < 1e-12);
    }
    assert!(init_twisted::<f64>(10, 5).is_err());
    assert!(init_twisted::<f64>(10, -4).is_ok());
}

#[test]
fn perturbation_examples() {
    let s = init_random::<f64>(100, 2);
    let zero = PerturbationSpec { at_time: 1.0, amplitude: 0.0, kind: PerturbationKind::UniformAdditive, seed: 3 };
    assert_eq!(apply_perturbation(&s, &zero), s);

    let spec = PerturbationSpec { amplitude: FRAC_PI_2, ..zero };
    assert_eq!(apply_perturbation(&s, &spec), apply_perturbation(&s, &spec));
    let kicks = spec.kicks::<f64>(100);
    // independent draw with the documented generator
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dist = Uniform::new_inclusive(-FRAC_PI_2, FRAC_PI_2);
    let oracle: Vec<f64> = (0..100).map(|_| dist.sample(&mut rng)).collect();
    assert_eq!(kicks, oracle);
    assert!(kicks.iter().all(|k| k.abs() <= FRAC_PI_2));
    let mean = kicks.iter().sum::<f64>() / 100.0;
    assert!((-0.1..=0.1).contains(&mean), "mean {mean}");
}

#[test]
fn kick_lands_on_the_step_grid() {
    let a = build_complete::<f64>(6).unwrap();
    let s0 = init_random::<f64>(6, 1);
    let run = Integration { horizon: 1.0, dt: 1e-3, dt_out: 0.1 };
    let spec = PerturbationSpec { at_time: 0.5, amplitude: 1.0, kind: PerturbationKind::UniformAdditive, seed: 8 };
    let before = simulate(&a, 1.0, 0.0, &s0, Integration { horizon: 0.5, ..run }, None).unwrap();
    let kicked = simulate(&a, 1.0, 0.0, &s0, run, Some(&spec)).unwrap();
    let expected = apply_perturbation(&before.last_state(), &spec);
    for (p, q) in kicked.states[5].iter().zip(&expected.phases) {
        assert!((p - q).abs() < 1e-12);
    }
    assert_eq!(spec.snapped(0.0, 1e-3).at_time, 0.5);
    assert!((spec.snapped(0.0, 0.3).at_time - 0.6).abs() < 1e-15);
}

#[test]
fn synchronized_state_has_zero_frequency() {
    let a = build_power_law::<f64>(30, 1.0).unwrap();
    let s = PhaseState::new(vec![0.4; 30]);
    assert!(instantaneous_frequency(&s, &a, 2.0, 0.0).iter().all(|f| f.abs() < 1e-14));
}

#[test]
fn trajectory_csv_round_trip() {
    let a = build_complete::<f64>(5).unwrap();
    let traj = simulate(&a, 1.0, 0.1, &init_random(5, 1), short_run(), None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    traj.write_csv(&path).unwrap();
    let back = Trajectory::<f64>::read_csv(&path, Provenance::Simulated).unwrap();
    assert_eq!(back.sample_times, traj.sample_times);
    for (s, r) in traj.states.iter().zip(&back.states) {
        for (p, q) in s.iter().zip(r) {
            assert!(circular_difference(*p, *q).abs() < 1e-15);
        }
    }
}

#[test]
fn single_precision_runs() {
    let a = build_complete::<f32>(10).unwrap();
    let traj = simulate(&a, 0.5f32, 0.0, &init_random(10, 1), Integration { horizon: 10.0, dt: 1e-2, dt_out: 0.1 }, None).unwrap();
    assert!(order_parameter(&traj.last_state().phases) > 0.99f32);
}

#[test]
fn bad_grids_are_rejected() {
    let a = build_complete::<f64>(3).unwrap();
    let s = init_random::<f64>(3, 1);
    assert!(simulate(&a, 1.0, 0.0, &s, Integration { horizon: 1.0, dt: 1e-3, dt_out: 1.5e-3 }, None).is_err());
    assert!(simulate(&a, 1.0, 0.0, &s, Integration { horizon: 1.0, dt: 0.0, dt_out: 0.1 }, None).is_err());
    let late = PerturbationSpec { at_time: 5.0, amplitude: 1.0, kind: PerturbationKind::UniformAdditive, seed: 1 };
    assert!(simulate(&a, 1.0, 0.0, &s, short_run(), Some(&late)).is_err());
}
