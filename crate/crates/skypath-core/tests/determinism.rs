//! Determinism and kinematic-consistency properties of the simulator and the
//! observation layer.

use proptest::prelude::*;
use skypath_core::geom::Vec2;
use skypath_core::mdp::{build_state, Action, NormSpec, StateVector};
use skypath_core::sim::{
    classify_step, lidar_scan, spawn_scenario, step_kinematics, step_obstacles, ArenaConfig,
    ScenarioKind, ScenarioSpec, SimConfig, UavKinematicState,
};

#[test]
fn identical_seed_and_actions_give_bit_identical_trajectories() {
    let cfg = SimConfig::default();
    let spec = ScenarioSpec::from_kind(ScenarioKind::Dynamic(10.0), 31);
    let actions: Vec<Action> = (0..80)
        .map(|k| Action::new(((k * 13 % 7) as f64 - 3.0) / 3.0, ((k * 5 % 9) as f64 - 4.0) / 4.0))
        .collect();
    let run = || {
        let mut world = spawn_scenario(&spec, &cfg).unwrap();
        let mut uav = UavKinematicState::from_pose(world.start, 0.3, 0.0);
        let mut log = Vec::new();
        for (k, a) in actions.iter().enumerate() {
            step_obstacles(&mut world, cfg.dt);
            uav = step_kinematics(&uav, *a, &cfg);
            let scan = lidar_scan(&uav, &world, &cfg);
            let status = classify_step(&world, &uav, k + 1, &cfg);
            log.push((uav, scan, status));
            if status.is_terminal() {
                break;
            }
        }
        log
    };
    let a = run();
    let b = run();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.0, y.0);
        assert_eq!(x.1, y.1);
        assert_eq!(x.2, y.2);
    }
}

proptest! {
    #[test]
    fn yaw_stays_wrapped_and_velocity_consistent(
        actions in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..120),
        yaw0 in -3.0..3.0f64,
    ) {
        let cfg = SimConfig::default();
        let mut s = UavKinematicState::from_pose(Vec2::new(100.0, 100.0), yaw0, 0.0);
        for (av, apsi) in actions {
            s = step_kinematics(&s, Action::new(av, apsi), &cfg);
            prop_assert!(s.yaw > -std::f64::consts::PI && s.yaw <= std::f64::consts::PI);
            prop_assert!((s.vel.norm() - s.speed.abs()).abs() < 1e-12);
            if s.speed > 1e-9 {
                let heading = s.vel.y.atan2(s.vel.x);
                let diff = skypath_core::geom::wrap_angle(heading - s.yaw).abs();
                prop_assert!(diff < 1e-12, "heading {heading} yaw {}", s.yaw);
            }
        }
    }

    #[test]
    fn normalization_round_trips(
        dx in -200.0..200.0f64,
        dy in -200.0..200.0f64,
        vx in -15.0..15.0f64,
        vy in -15.0..15.0f64,
        speed in -15.0..15.0f64,
        yaw in -3.14..3.14f64,
        lidar_seed in 0.0..20.0f64,
    ) {
        let arena = ArenaConfig::default();
        let cfg = SimConfig::default();
        let norm = NormSpec::new(&arena, &cfg);
        let s = StateVector {
            rel_target: Vec2::new(dx, dy),
            vel: Vec2::new(vx, vy),
            speed,
            yaw,
            lidar: [lidar_seed, 20.0 - lidar_seed, 3.0, 20.0, 0.0, 11.5, lidar_seed / 2.0],
        };
        let back = norm.denormalize(&norm.normalize(&s));
        let a = s.to_array();
        let b = back.to_array();
        for k in 0..13 {
            prop_assert!((a[k] - b[k]).abs() < 1e-12, "component {k}: {} vs {}", a[k], b[k]);
        }
    }
}

#[test]
fn build_state_layout_matches_scan() {
    let cfg = SimConfig::default();
    let spec = ScenarioSpec::from_kind(ScenarioKind::Training, 5);
    let world = spawn_scenario(&spec, &cfg).unwrap();
    let uav = UavKinematicState::from_pose(world.start, 1.0, 4.0);
    let scan = lidar_scan(&uav, &world, &cfg);
    let s = build_state(&uav, &world, scan);
    assert_eq!(s.lidar, scan);
    assert_eq!(s.rel_target, world.target - uav.position);
}
