//! Lidar equivalence against the independent analytic intersection solver,
//! over randomized poses and worlds.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skypath_core::geom::Vec2;
use skypath_core::oracle::{lidar_scan_reference, nearest_distance_reference};
use skypath_core::sim::{
    lidar_scan, nearest_obstacle_distance, ArenaConfig, ObstacleCylinder, SimConfig,
    UavKinematicState, World,
};

fn random_world(rng: &mut ChaCha8Rng) -> World {
    let arena = ArenaConfig {
        width: rng.random_range(60.0..220.0),
        depth: rng.random_range(60.0..220.0),
        height: 50.0,
    };
    let n = rng.random_range(0..12);
    let obstacles = (0..n)
        .map(|_| ObstacleCylinder {
            center: Vec2::new(
                rng.random_range(0.0..arena.width),
                rng.random_range(0.0..arena.depth),
            ),
            radius: rng.random_range(0.5..18.0),
            height: 50.0,
            velocity_x: 0.0,
        })
        .collect();
    World {
        arena,
        obstacles,
        start: Vec2::new(10.0, 10.0),
        target: Vec2::new(arena.width - 10.0, arena.depth - 10.0),
        seed: 0,
    }
}

fn random_pose(rng: &mut ChaCha8Rng, world: &World) -> UavKinematicState {
    UavKinematicState::from_pose(
        Vec2::new(
            rng.random_range(0.5..world.arena.width - 0.5),
            rng.random_range(0.5..world.arena.depth - 0.5),
        ),
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        rng.random_range(-15.0..15.0),
    )
}

#[test]
fn thousand_random_scans_match_reference_solver() {
    let cfg = SimConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    for _ in 0..1000 {
        let world = random_world(&mut rng);
        let pose = random_pose(&mut rng, &world);
        let ours = lidar_scan(&pose, &world, &cfg);
        let reference = lidar_scan_reference(&pose, &world, &cfg);
        for (ray, (a, b)) in ours.iter().zip(&reference).enumerate() {
            assert!(
                (a - b).abs() <= 1e-9,
                "ray {ray} disagrees: {a} vs {b} at pose {pose:?}"
            );
            checked += 1;
        }
    }
    assert_eq!(checked, 7000);
}

#[test]
fn nearest_distance_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..500 {
        let world = random_world(&mut rng);
        let p = Vec2::new(
            rng.random_range(0.0..world.arena.width),
            rng.random_range(0.0..world.arena.depth),
        );
        let a = nearest_obstacle_distance(p, &world);
        let b = nearest_distance_reference(p, &world);
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
}
