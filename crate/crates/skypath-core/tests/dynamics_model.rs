//! Learnability of the transition model against the simulator as ground
//! truth: one-step accuracy, multi-step rollouts, and pretraining quality.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skypath_core::dynamics::{
    collect_random_windows, DynConfig, DynamicsModel, HistoryBuffer, TrajectoryWindow,
};
use skypath_core::geom::Vec2;
use skypath_core::mdp::{build_state, Action, NormSpec};
use skypath_core::nn::OptimizerConfig;
use skypath_core::sim::{
    lidar_scan, spawn_scenario, step_kinematics, ArenaConfig, ScenarioKind, ScenarioSpec,
    SimConfig, UavKinematicState, World,
};

fn empty_world(side: f64, seed: u64) -> World {
    let spec = ScenarioSpec {
        arena: ArenaConfig {
            width: side,
            depth: side,
            height: 50.0,
        },
        obstacles: vec![],
        ..ScenarioSpec::from_kind(ScenarioKind::Training, seed)
    };
    spawn_scenario(&spec, &SimConfig::default()).unwrap()
}

fn kinematic_cfg() -> DynConfig {
    DynConfig {
        history_len: 5,
        lstm_layers: 1,
        lstm_units: 16,
        readout_hidden: 128,
        batch_size: 64,
        train_input_noise: 0.0,
        optimizer: OptimizerConfig {
            learning_rate: 0.01,
            grad_clip: Some(5.0),
            lr_decay: 0.96,
            ..OptimizerConfig::default()
        },
        ..DynConfig::default()
    }
}

/// Interior flight in a big empty arena: walls stay out of sensor range, so
/// the data exercises the kinematic update law alone.
fn collect_interior(
    world: &World,
    sim: &SimConfig,
    l: usize,
    episodes: usize,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<TrajectoryWindow> {
    let norm = NormSpec::new(&world.arena, sim);
    let mut out = Vec::new();
    for _ in 0..episodes {
        let mut uav = UavKinematicState::from_pose(
            Vec2::new(rng.random_range(70.0..130.0), rng.random_range(70.0..130.0)),
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
            0.0,
        );
        let mut hist = HistoryBuffer::new(l);
        let mut s = norm.normalize(&build_state(&uav, world, lidar_scan(&uav, world, sim)));
        for _ in 0..steps {
            let a = Action::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            uav = step_kinematics(&uav, a, sim);
            let next = norm.normalize(&build_state(&uav, world, lidar_scan(&uav, world, sim)));
            out.push(hist.window(s, a.to_array(), next));
            hist.push(s, a.to_array());
            s = next;
        }
    }
    out
}

#[test]
fn empty_world_one_step_position_error_under_ten_centimeters() {
    let world = empty_world(200.0, 1);
    let sim = SimConfig::default();
    let cfg = kinematic_cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let train = collect_interior(&world, &sim, cfg.history_len, 800, 6, &mut rng);
    let held = collect_interior(&world, &sim, cfg.history_len, 100, 6, &mut rng);

    let mut model = DynamicsModel::new(cfg, 17);
    model.train_epochs(&train, 90, false, None, &mut rng);

    let norm = NormSpec::new(&world.arena, &sim);
    let mut sum = 0.0;
    for w in &held {
        let (state, action) = w.steps[w.steps.len() - 1];
        let history = &w.steps[..w.steps.len() - 1];
        let pred = model.predict_next(history, &state, &action);
        let pred_raw = norm.denormalize(&pred);
        let true_raw = norm.denormalize(&w.next_state);
        sum += pred_raw.rel_target.distance(true_raw.rel_target);
    }
    let mean = sum / held.len() as f64;
    assert!(mean < 0.1, "mean one-step position error {mean:.4} m");
}

#[test]
fn empty_world_five_step_rollout_terminal_error_under_one_meter() {
    let world = empty_world(200.0, 2);
    let sim = SimConfig::default();
    let cfg = kinematic_cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let train = collect_interior(&world, &sim, cfg.history_len, 800, 6, &mut rng);
    let mut model = DynamicsModel::new(cfg, 23);
    model.train_epochs(&train, 90, false, None, &mut rng);

    let norm = NormSpec::new(&world.arena, &sim);
    let mut uav = UavKinematicState::from_pose(Vec2::new(100.0, 100.0), 0.4, 0.0);
    let mut history = HistoryBuffer::new(cfg.history_len);
    let mut state = norm.normalize(&build_state(&uav, &world, lidar_scan(&uav, &world, &sim)));
    for k in 0..4 {
        let a = Action::new(0.4, if k % 2 == 0 { 0.2 } else { -0.2 });
        uav = step_kinematics(&uav, a, &sim);
        let next = norm.normalize(&build_state(&uav, &world, lidar_scan(&uav, &world, &sim)));
        history.push(state, a.to_array());
        state = next;
    }
    let plan = [
        [0.6, 0.1],
        [0.7, -0.2],
        [0.8, 0.0],
        [0.6, 0.3],
        [0.7, -0.1],
    ];
    let predicted = model.rollout(&history.padded(), &state, &plan);
    let mut sim_uav = uav;
    for a in plan {
        sim_uav = step_kinematics(&sim_uav, Action::new(a[0], a[1]), &sim);
    }
    let true_state = build_state(&sim_uav, &world, lidar_scan(&sim_uav, &world, &sim));
    let pred_raw = norm.denormalize(&predicted[predicted.len() - 1]);
    let err = pred_raw.rel_target.distance(true_state.rel_target);
    assert!(err < 1.0, "terminal rollout position error {err:.3} m");
}

#[test]
fn pretraining_reaches_held_out_mse_below_threshold() {
    // Walls in view, the full 13-component objective.
    let world = empty_world(50.0, 3);
    let sim = SimConfig::default();
    let mut cfg = DynConfig::desk_scale();
    cfg.optimizer.max_epochs = 40;
    let mut model = DynamicsModel::new(cfg, 31);
    model.pretrain_from_limited_map(&world, &sim, 320, 40, 909);
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let held = collect_random_windows(&world, &sim, cfg.history_len, 40, 40, &mut rng);
    let mse = model.dataset_loss(&held);
    assert!(mse < 0.05, "held-out normalized one-step MSE {mse:.4}");
}

#[test]
fn raw_error_scales_with_component_ranges() {
    // Normalized-space error times the component scale equals raw error.
    let arena = ArenaConfig {
        width: 50.0,
        depth: 50.0,
        height: 50.0,
    };
    let sim = SimConfig::default();
    let norm = NormSpec::new(&arena, &sim);
    let mut a = [0.0; 13];
    let mut b = [0.0; 13];
    a[0] = 0.3;
    b[0] = 0.5;
    let ra = norm.denormalize(&a);
    let rb = norm.denormalize(&b);
    let raw = (rb.rel_target.x - ra.rel_target.x).abs();
    assert!((raw - 0.2 * arena.width).abs() < 1e-12);
}
