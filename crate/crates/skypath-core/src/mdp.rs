//! Observation vector, action mapping and the four-term reward.

use crate::geom::{wrap_angle, Vec2};
use crate::sim::{ArenaConfig, SimConfig, StepOutcome, UavKinematicState, World};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const STATE_DIM: usize = 13;
pub const ACTION_DIM: usize = 2;

/// Penalty applied at every step.
pub const STEP_PENALTY: f64 = -0.01;
/// Worst-case orientation penalty, reached when flying directly away from the
/// target bearing.
pub const ORIENTATION_PENALTY_MAX: f64 = -0.01;

/// The 13-component observation: target offset, velocity, speed, yaw, and the
/// 7 lidar readings, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub rel_target: Vec2,
    pub vel: Vec2,
    pub speed: f64,
    pub yaw: f64,
    pub lidar: [f64; 7],
}

impl StateVector {
    pub fn to_array(&self) -> [f64; STATE_DIM] {
        let mut out = [0.0; STATE_DIM];
        out[0] = self.rel_target.x;
        out[1] = self.rel_target.y;
        out[2] = self.vel.x;
        out[3] = self.vel.y;
        out[4] = self.speed;
        out[5] = self.yaw;
        out[6..13].copy_from_slice(&self.lidar);
        out
    }

    pub fn from_array(a: &[f64; STATE_DIM]) -> Self {
        let mut lidar = [0.0; 7];
        lidar.copy_from_slice(&a[6..13]);
        StateVector {
            rel_target: Vec2::new(a[0], a[1]),
            vel: Vec2::new(a[2], a[3]),
            speed: a[4],
            yaw: a[5],
            lidar,
        }
    }
}

/// Two-component control in [-1, 1]^2: speed as a fraction of `v_max` and a
/// steering signal. Clamped at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub speed_ratio: f64,
    pub steering: f64,
}

impl Action {
    pub fn new(speed_ratio: f64, steering: f64) -> Self {
        Action {
            speed_ratio: speed_ratio.clamp(-1.0, 1.0),
            steering: steering.clamp(-1.0, 1.0),
        }
    }

    pub fn to_array(&self) -> [f64; ACTION_DIM] {
        [self.speed_ratio, self.steering]
    }

    pub fn from_array(a: &[f64; ACTION_DIM]) -> Self {
        Action::new(a[0], a[1])
    }
}

/// Reward term weights plus the terminal target bonus. The guidance terms
/// (distance, obstacle) must outweigh the regularizers (step, orientation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub target_bonus: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            w1: 1.0,
            w2: 0.5,
            w3: 0.5,
            w4: 1.0,
            target_bonus: 10.0,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.w1 > self.w2 && self.w1 > self.w3 && self.w4 > self.w2 && self.w4 > self.w3) {
            return Err(format!(
                "reward weights must satisfy w1 > w2, w1 > w3, w4 > w2, w4 > w3 (got {self:?})"
            ));
        }
        Ok(())
    }
}

/// Per-term rewards and their weighted total (including the terminal bonus).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub bonus: f64,
    pub total: f64,
}

/// Everything the reward needs about one transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardInputs {
    /// Distance to target before the step.
    pub d_prev: f64,
    /// Distance to target after the step.
    pub d_curr: f64,
    /// Absolute angular error to the target bearing, in [0, pi].
    pub yaw_err: f64,
    /// Distance to the nearest obstacle after the step.
    pub d_min: f64,
    pub status: StepOutcome,
}

/// Distance term: +1 for closing in, -0.1 for drifting away, 0 on a tie.
pub fn reward_distance(d_prev: f64, d_curr: f64) -> f64 {
    let d_dis = d_curr - d_prev;
    if d_dis > 0.0 {
        -0.1
    } else if d_dis < 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Constant per-step penalty.
pub fn reward_step() -> f64 {
    STEP_PENALTY
}

/// Orientation term, linear in the bearing error with worst case -0.01.
pub fn reward_orientation(yaw_err: f64) -> f64 {
    ORIENTATION_PENALTY_MAX * (yaw_err / PI)
}

/// Obstacle term: -1 on collision, -0.1 inside the safe distance, else 0.
pub fn reward_obstacle(d_min: f64, collided: bool, cfg: &SimConfig) -> f64 {
    if collided {
        -1.0
    } else if d_min < cfg.safe_distance {
        -0.1
    } else {
        0.0
    }
}

/// Weighted four-term reward plus the terminal bonus on reaching the target.
pub fn total_reward(inp: &RewardInputs, w: &RewardWeights, cfg: &SimConfig) -> RewardBreakdown {
    let r1 = reward_distance(inp.d_prev, inp.d_curr);
    let r2 = reward_step();
    let r3 = reward_orientation(inp.yaw_err);
    let r4 = reward_obstacle(inp.d_min, inp.status == StepOutcome::Collision, cfg);
    let bonus = if inp.status == StepOutcome::ReachedTarget {
        w.target_bonus
    } else {
        0.0
    };
    RewardBreakdown {
        r1,
        r2,
        r3,
        r4,
        bonus,
        total: w.w1 * r1 + w.w2 * r2 + w.w3 * r3 + w.w4 * r4 + bonus,
    }
}

/// Absolute angular error between the UAV heading and the bearing to the
/// target, in [0, pi]. Zero when standing on the target.
pub fn bearing_error(position: Vec2, yaw: f64, target: Vec2) -> f64 {
    let delta = target - position;
    if delta.norm() < 1e-12 {
        return 0.0;
    }
    wrap_angle(delta.y.atan2(delta.x) - yaw).abs()
}

/// Assemble the raw observation for the current pose and scan.
pub fn build_state(uav: &UavKinematicState, world: &World, lidar: [f64; 7]) -> StateVector {
    StateVector {
        rel_target: world.target - uav.position,
        vel: uav.vel,
        speed: uav.speed,
        yaw: uav.yaw,
        lidar,
    }
}

/// Component scales mapping raw observations onto [-1, 1] for the networks.
/// Lidar maps [0, sensor_range] onto [-1, 1]; everything else is symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub dx_range: f64,
    pub dy_range: f64,
    pub v_range: f64,
    pub sensor_range: f64,
}

impl NormSpec {
    pub fn new(arena: &ArenaConfig, cfg: &SimConfig) -> Self {
        NormSpec {
            dx_range: arena.width,
            dy_range: arena.depth,
            v_range: cfg.v_max,
            sensor_range: cfg.sensor_range,
        }
    }

    pub fn normalize(&self, s: &StateVector) -> [f64; STATE_DIM] {
        let mut out = [0.0; STATE_DIM];
        out[0] = s.rel_target.x / self.dx_range;
        out[1] = s.rel_target.y / self.dy_range;
        out[2] = s.vel.x / self.v_range;
        out[3] = s.vel.y / self.v_range;
        out[4] = s.speed / self.v_range;
        out[5] = s.yaw / PI;
        for i in 0..7 {
            out[6 + i] = 2.0 * s.lidar[i] / self.sensor_range - 1.0;
        }
        out
    }

    pub fn denormalize(&self, n: &[f64; STATE_DIM]) -> StateVector {
        let mut lidar = [0.0; 7];
        for i in 0..7 {
            lidar[i] = (n[6 + i] + 1.0) * self.sensor_range / 2.0;
        }
        StateVector {
            rel_target: Vec2::new(n[0] * self.dx_range, n[1] * self.dy_range),
            vel: Vec2::new(n[2] * self.v_range, n[3] * self.v_range),
            speed: n[4] * self.v_range,
            yaw: n[5] * PI,
            lidar,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{ScenarioKind, ScenarioSpec};

    #[test]
    fn action_clamps_at_construction() {
        let a = Action::new(1.7, -2.3);
        assert_eq!(a.to_array(), [1.0, -1.0]);
    }

    #[test]
    fn distance_reward_piecewise() {
        assert_eq!(reward_distance(10.0, 12.0), -0.1);
        assert_eq!(reward_distance(10.0, 8.0), 1.0);
        assert_eq!(reward_distance(10.0, 10.0), 0.0);
    }

    #[test]
    fn step_penalty_accumulates() {
        assert_eq!(reward_step(), -0.01);
        let sum: f64 = (0..100).map(|_| reward_step()).sum();
        assert!((sum + 1.0).abs() < 1e-12);
        assert!((0.5 * reward_step() + 0.005).abs() < 1e-15);
    }

    #[test]
    fn orientation_reward_linear_in_error() {
        assert_eq!(reward_orientation(0.0), 0.0);
        assert_eq!(reward_orientation(PI), -0.01);
        assert!((reward_orientation(PI / 2.0) + 0.005).abs() < 1e-15);
    }

    #[test]
    fn obstacle_reward_cases() {
        let cfg = SimConfig::default();
        assert_eq!(reward_obstacle(5.0, true, &cfg), -1.0);
        assert_eq!(reward_obstacle(1.0, false, &cfg), -0.1);
        assert_eq!(reward_obstacle(5.0, false, &cfg), 0.0);
    }

    #[test]
    fn total_reward_examples() {
        let cfg = SimConfig::default();
        let w = RewardWeights::default();
        // Approaching step, far from obstacles.
        let r = total_reward(
            &RewardInputs {
                d_prev: 10.0,
                d_curr: 8.0,
                yaw_err: 0.0,
                d_min: 10.0,
                status: StepOutcome::Running,
            },
            &w,
            &cfg,
        );
        assert!((r.total - 0.995).abs() < 1e-12);
        // Collision while drifting away.
        let r = total_reward(
            &RewardInputs {
                d_prev: 10.0,
                d_curr: 12.0,
                yaw_err: 0.0,
                d_min: 0.0,
                status: StepOutcome::Collision,
            },
            &w,
            &cfg,
        );
        assert!((r.total + 1.105).abs() < 1e-12);
    }

    #[test]
    fn reward_weights_ordering_enforced() {
        assert!(RewardWeights::default().validate().is_ok());
        let bad = RewardWeights {
            w1: 0.1,
            ..RewardWeights::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn build_state_orders_components() {
        let spec = ScenarioSpec {
            obstacles: vec![],
            ..ScenarioSpec::from_kind(ScenarioKind::Training, 5)
        };
        let mut world = crate::sim::spawn_scenario(&spec, &SimConfig::default()).unwrap();
        world.target = Vec2::new(100.0, 50.0);
        let uav = UavKinematicState::from_pose(Vec2::new(40.0, 30.0), 0.25, 3.0);
        let scan = crate::sim::lidar_scan(&uav, &world, &SimConfig::default());
        let s = build_state(&uav, &world, scan);
        let arr = s.to_array();
        assert_eq!(arr[0], 60.0);
        assert_eq!(arr[1], 20.0);
        assert_eq!(arr[4], 3.0);
        assert_eq!(arr[5], 0.25);
        assert_eq!(&arr[6..13], &scan);
    }

    #[test]
    fn zero_state_normalizes_to_lidar_ones() {
        let arena = ArenaConfig::default();
        let cfg = SimConfig::default();
        let norm = NormSpec::new(&arena, &cfg);
        let s = StateVector {
            rel_target: Vec2::ZERO,
            vel: Vec2::ZERO,
            speed: 0.0,
            yaw: 0.0,
            lidar: [cfg.sensor_range; 7],
        };
        let n = norm.normalize(&s);
        assert_eq!(&n[0..6], &[0.0; 6]);
        assert_eq!(&n[6..13], &[1.0; 7]);
    }

    #[test]
    fn bearing_error_degenerate_at_target() {
        assert_eq!(bearing_error(Vec2::new(3.0, 4.0), 1.0, Vec2::new(3.0, 4.0)), 0.0);
        let e = bearing_error(Vec2::ZERO, 0.0, Vec2::new(0.0, 5.0));
        assert!((e - PI / 2.0).abs() < 1e-12);
    }
}
