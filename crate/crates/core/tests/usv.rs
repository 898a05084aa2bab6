use std::f64::consts::{PI, TAU};

use mcgpmp::geometry::{point_segment_distance, wrap_to_pi};
use mcgpmp::usv::{
    convert_frame, invert_frame, refine_heading, run_mission, step_kinematics, timed_waypoints,
    Commands, ControllerGains, MissionParams, VesselParams, VesselState,
};
use mcgpmp::{EnvironmentField, GridShape};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn steady_turn_follows_a_circular_arc() {
    let p = VesselParams::default();
    let (speed, rudder) = (4.0, 0.2);
    let rate = p.rudder_gain * rudder;
    let psi0 = 0.3;
    let mut s = VesselState {
        u: speed,
        r: rate,
        ..VesselState::at_rest(10.0, -5.0, psi0)
    };
    let cmd = Commands {
        rudder,
        thrust: speed / p.max_speed,
    };
    let dt = 0.01;
    for k in 1..=10_000 {
        s = step_kinematics(&s, cmd, [0.0, 0.0], dt, &p);
        if k % 1000 == 0 {
            let t = k as f64 * dt;
            let radius = speed / rate;
            let north = -5.0 + radius * ((psi0 + rate * t).sin() - psi0.sin());
            let east = 10.0 + radius * (psi0.cos() - (psi0 + rate * t).cos());
            assert!((s.north - north).abs() <= 1e-6, "t {t}: north {} vs {north}", s.north);
            assert!((s.east - east).abs() <= 1e-6, "t {t}: east {} vs {east}", s.east);
        }
    }
}

#[test]
fn eastward_surge_moves_east_only() {
    let p = VesselParams::default();
    let s = VesselState {
        u: 1.0,
        ..VesselState::at_rest(0.0, 0.0, PI / 2.0)
    };
    let dt = 1e-3;
    let cmd = Commands {
        rudder: 0.0,
        thrust: 0.1,
    };
    let next = step_kinematics(&s, cmd, [0.0, 0.0], dt, &p);
    assert!(next.east > 0.0);
    assert!(next.north.abs() <= dt * dt);
}

#[test]
fn bearings_match_vector_angles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let a: [f64; 2] = [rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0)];
        let b: [f64; 2] = [rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0)];
        let (de, dn) = (b[0] - a[0], b[1] - a[1]);
        // Angle from north via the dot product, reflected when the target
        // lies west of north.
        let from_north = (dn / de.hypot(dn)).clamp(-1.0, 1.0).acos();
        let mut want = if de >= 0.0 { from_north } else { TAU - from_north };
        if want <= 0.0 {
            want += TAU;
        }
        let got = refine_heading(a, b, 1.0);
        assert!(!got.degenerate);
        let diff = wrap_to_pi(got.psi_d - want).abs();
        assert!(diff <= 1e-12 * (1.0 + want), "{a:?} -> {b:?}: {} vs {want}", got.psi_d);
        assert!(got.psi_d > 0.0 && got.psi_d <= TAU);
    }
}

#[test]
fn frame_round_trip_on_many_angles() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100_000 {
        let a = rng.random_range(-PI..=PI);
        let a = if a == -PI { PI } else { a };
        let (n, flagged) = convert_frame(a);
        assert!(!flagged);
        assert!(n > 0.0 && n <= TAU);
        assert!((invert_frame(n) - a).abs() <= 1e-12);
        assert!((convert_frame(invert_frame(n)).0 - n).abs() <= 1e-12);
    }
}

#[test]
fn straight_leg_is_reached_with_small_cross_track() {
    let waypoints = timed_waypoints(&[[0.0, 0.0], [200.0, 150.0]], 10.0, 5.0);
    let log = run_mission(&waypoints, &ControllerGains::default(), None, &MissionParams::default()).unwrap();
    assert!(log.completed);
    assert!(log.final_distance <= 7.0);
    assert!(log.max_cross_track() < 2.0, "{}", log.max_cross_track());
}

#[test]
fn cross_track_is_distance_to_the_track() {
    let path: Vec<[f64; 2]> = (0..=40)
        .map(|k| {
            let x = k as f64 * 10.0;
            [x, 60.0 * (x / 90.0).sin()]
        })
        .collect();
    let waypoints = timed_waypoints(&path, 10.0, 5.0);
    let track: Vec<[f64; 2]> = waypoints.iter().map(|w| w.position).collect();
    let log = run_mission(&waypoints, &ControllerGains::default(), None, &MissionParams::default()).unwrap();
    assert!(log.completed);
    for r in log.records.iter().step_by(97) {
        let p = [r.east, r.north];
        let want = track
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min);
        assert!(r.cross_track >= 0.0);
        assert!((r.cross_track - want).abs() <= 1e-9);
    }
}

#[test]
fn weaving_across_north_never_spins_the_vessel() {
    // The track wanders either side of due north, so the desired heading
    // keeps crossing the 0 / 2pi seam.
    let path: Vec<[f64; 2]> = (0..=30)
        .map(|k| {
            let n = k as f64 * 12.0;
            [8.0 * (n / 40.0).sin(), n]
        })
        .collect();
    let waypoints = timed_waypoints(&path, 12.0, 4.0);
    let log = run_mission(&waypoints, &ControllerGains::default(), None, &MissionParams::default()).unwrap();
    assert!(log.completed);
    let crossings = log
        .records
        .windows(2)
        .filter(|w| (w[1].psi_d - w[0].psi_d).abs() > PI)
        .count();
    assert!(crossings > 0, "the desired heading never crossed north");
    let turned: f64 = log
        .records
        .windows(2)
        .map(|w| wrap_to_pi(w[1].psi - w[0].psi).abs())
        .sum();
    assert!(turned < PI, "total turning {turned} rad");
}

#[test]
fn currents_push_the_vessel_off_a_still_water_track() {
    let shape = GridShape::new(300, 300, 1.0).unwrap();
    let current = vec![[0.0, 0.8]; shape.len()];
    let env = EnvironmentField::from_current(shape, current, 2.0).unwrap();
    let waypoints = timed_waypoints(&[[20.0, 150.0], [280.0, 150.0]], 10.0, 5.0);
    let gains = ControllerGains::default();
    let params = MissionParams::default();
    let calm = run_mission(&waypoints, &gains, None, &params).unwrap();
    let drift = run_mission(&waypoints, &gains, Some(&env), &params).unwrap();
    assert!(calm.completed && drift.completed);
    assert!(drift.mean_cross_track() > calm.mean_cross_track());
}

proptest! {
    #[test]
    fn uniform_current_advects_an_idle_vessel(
        ce in -2.0..2.0f64,
        cn in -2.0..2.0f64,
        psi in 0.01..TAU,
        steps in 1usize..2000,
    ) {
        let p = VesselParams::default();
        let mut s = VesselState::at_rest(3.0, 4.0, psi);
        let dt = 0.01;
        for _ in 0..steps {
            s = step_kinematics(&s, Commands::default(), [ce, cn], dt, &p);
        }
        let t = steps as f64 * dt;
        prop_assert!((s.east - (3.0 + ce * t)).abs() <= 1e-9);
        prop_assert!((s.north - (4.0 + cn * t)).abs() <= 1e-9);
    }

    #[test]
    fn frame_conversion_is_a_bijection(a in -PI..PI) {
        let a = if a == -PI { PI } else { a };
        let (n, _) = convert_frame(a);
        prop_assert!(n > 0.0 && n <= TAU);
        prop_assert!((invert_frame(n) - a).abs() <= 1e-12);
        if a > 0.0 {
            prop_assert_eq!(n, a);
        } else {
            prop_assert!((n - (a + TAU)).abs() <= 1e-15);
        }
    }

    #[test]
    fn headings_stay_in_range(
        psi in -20.0..20.0f64,
        rudder in -1.0..1.0f64,
        thrust in 0.0..1.0f64,
    ) {
        let p = VesselParams::default();
        let mut s = VesselState { u: 3.0, r: 0.4, ..VesselState::at_rest(0.0, 0.0, psi) };
        for _ in 0..500 {
            s = step_kinematics(&s, Commands { rudder, thrust }, [0.0, 0.0], 0.01, &p);
            prop_assert!(s.psi > 0.0 && s.psi <= TAU);
            prop_assert!(s.speed() <= p.max_speed + 1e-9);
            prop_assert!(s.rudder.abs() <= p.max_rudder);
        }
    }
}
