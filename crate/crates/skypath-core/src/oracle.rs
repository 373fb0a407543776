//! Independent reference implementations for the test suites.
//!
//! Everything here is coded from the underlying math, separately from the
//! production paths it is checked against: the ray caster uses an
//! unnormalized quadratic and a cross-product segment test, and the reward
//! evaluator restates the piecewise rules. Enabled by the `oracle` feature;
//! not part of the production API.

use crate::geom::Vec2;
use crate::mdp::{RewardWeights, StateVector};
use crate::sim::{SimConfig, StepOutcome, UavKinematicState, World, LIDAR_OFFSETS};

/// Smallest non-negative root of |o + t d - c|^2 = r^2 for an unnormalized
/// direction, via the explicit abc quadratic.
pub fn ray_circle_reference(
    origin: (f64, f64),
    dir: (f64, f64),
    center: (f64, f64),
    radius: f64,
) -> Option<f64> {
    let ox = origin.0 - center.0;
    let oy = origin.1 - center.1;
    let a = dir.0 * dir.0 + dir.1 * dir.1;
    let b = 2.0 * (ox * dir.0 + oy * dir.1);
    let c = ox * ox + oy * oy - radius * radius;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 || a == 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let lo = (-b - sq) / (2.0 * a);
    let hi = (-b + sq) / (2.0 * a);
    if lo >= 0.0 {
        Some(lo)
    } else if hi >= 0.0 {
        Some(hi)
    } else {
        None
    }
}

/// Ray vs segment via the standard two-cross-products construction.
pub fn ray_segment_reference(
    origin: (f64, f64),
    dir: (f64, f64),
    a: (f64, f64),
    b: (f64, f64),
) -> Option<f64> {
    let rx = dir.0;
    let ry = dir.1;
    let sx = b.0 - a.0;
    let sy = b.1 - a.1;
    let denom = rx * sy - ry * sx;
    if denom == 0.0 {
        return None;
    }
    let qpx = a.0 - origin.0;
    let qpy = a.1 - origin.1;
    let t = (qpx * sy - qpy * sx) / denom;
    let u = (qpx * ry - qpy * rx) / denom;
    if t >= 0.0 && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// Full 7-ray scan against every obstacle circle and the four wall segments.
pub fn lidar_scan_reference(s: &UavKinematicState, world: &World, cfg: &SimConfig) -> [f64; 7] {
    let (w, d) = (world.arena.width, world.arena.depth);
    let corners = [(0.0, 0.0), (w, 0.0), (w, d), (0.0, d)];
    let walls = [
        (corners[0], corners[1]),
        (corners[1], corners[2]),
        (corners[2], corners[3]),
        (corners[3], corners[0]),
    ];
    let mut out = [cfg.sensor_range; 7];
    for (i, offset) in LIDAR_OFFSETS.iter().enumerate() {
        let theta = s.yaw + offset;
        let dir = (theta.cos(), theta.sin());
        let origin = (s.position.x, s.position.y);
        let mut best = cfg.sensor_range;
        for o in &world.obstacles {
            if let Some(t) = ray_circle_reference(origin, dir, (o.center.x, o.center.y), o.radius) {
                best = best.min(t);
            }
        }
        for (a, b) in walls {
            if let Some(t) = ray_segment_reference(origin, dir, a, b) {
                best = best.min(t);
            }
        }
        out[i] = best;
    }
    out
}

/// Point-to-world clearance restated: wall slabs and obstacle surfaces.
pub fn nearest_distance_reference(p: Vec2, world: &World) -> f64 {
    let mut best = f64::INFINITY;
    for wall in [
        p.x,
        world.arena.width - p.x,
        p.y,
        world.arena.depth - p.y,
    ] {
        best = best.min(wall);
    }
    for o in &world.obstacles {
        let dx = p.x - o.center.x;
        let dy = p.y - o.center.y;
        best = best.min((dx * dx + dy * dy).sqrt() - o.radius);
    }
    if best < 0.0 {
        0.0
    } else {
        best
    }
}

/// Inputs for the reward evaluator, mirroring the production structure.
#[derive(Debug, Clone, Copy)]
pub struct RewardCase {
    pub d_prev: f64,
    pub d_curr: f64,
    pub yaw_err: f64,
    pub d_min: f64,
    pub status: StepOutcome,
}

/// Brute-force restatement of the four-term reward and its weighted total.
pub fn total_reward_reference(case: &RewardCase, w: &RewardWeights, cfg: &SimConfig) -> f64 {
    let r1 = if case.d_curr - case.d_prev > 0.0 {
        -0.1
    } else if case.d_curr - case.d_prev < 0.0 {
        1.0
    } else {
        0.0
    };
    let r2 = -0.01;
    let r3 = -0.01 * (case.yaw_err / std::f64::consts::PI);
    let collided = matches!(case.status, StepOutcome::Collision);
    let r4 = if collided {
        -1.0
    } else if case.d_min < cfg.safe_distance {
        -0.1
    } else {
        0.0
    };
    let bonus = if matches!(case.status, StepOutcome::ReachedTarget) {
        w.target_bonus
    } else {
        0.0
    };
    w.w1 * r1 + w.w2 * r2 + w.w3 * r3 + w.w4 * r4 + bonus
}

/// Layer-by-layer dense forward pass restated with index arithmetic.
pub fn mlp_forward_reference(
    widths: &[usize],
    weights: &[Vec<f64>],
    biases: &[Vec<f64>],
    tanh_output: bool,
    input: &[f64],
) -> Vec<f64> {
    let mut x = input.to_vec();
    let layers = widths.len() - 1;
    for l in 0..layers {
        let (n_in, n_out) = (widths[l], widths[l + 1]);
        let mut y = vec![0.0; n_out];
        for r in 0..n_out {
            let mut acc = biases[l][r];
            for c in 0..n_in {
                acc += weights[l][r * n_in + c] * x[c];
            }
            y[r] = acc;
        }
        let last = l == layers - 1;
        for v in &mut y {
            if last {
                if tanh_output {
                    *v = v.tanh();
                }
            } else if *v < 0.0 {
                *v = 0.0;
            }
        }
        x = y;
    }
    x
}

/// Normalized observation restated from the component scales.
pub fn normalize_reference(s: &StateVector, arena_w: f64, arena_d: f64, v_max: f64, range: f64) -> [f64; 13] {
    let mut out = [0.0; 13];
    out[0] = s.rel_target.x / arena_w;
    out[1] = s.rel_target.y / arena_d;
    out[2] = s.vel.x / v_max;
    out[3] = s.vel.y / v_max;
    out[4] = s.speed / v_max;
    out[5] = s.yaw / std::f64::consts::PI;
    for k in 0..7 {
        out[6 + k] = 2.0 * s.lidar[k] / range - 1.0;
    }
    out
}
