//! Planar geometry primitives: vectors, angle wrapping, ray casts.

use serde::{Deserialize, Serialize};

/// 2D point/vector in meters, f64 throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Unit vector for a heading angle.
    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = (theta + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if w == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        w
    }
}

/// Distance along a unit-direction ray to a circle, if hit.
///
/// Returns the smallest non-negative parameter; an origin inside the circle
/// reports the exit point.
pub fn ray_circle(origin: Vec2, dir: Vec2, center: Vec2, radius: f64) -> Option<f64> {
    let oc = origin - center;
    let b = oc.dot(dir);
    let c = oc.dot(oc) - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = -b - sq;
    let t1 = -b + sq;
    if t0 >= 0.0 {
        Some(t0)
    } else if t1 >= 0.0 {
        Some(t1)
    } else {
        None
    }
}

/// Distance along a unit-direction ray to an axis-aligned segment.
///
/// `axis` selects which coordinate is fixed: 0 holds x = `at`, 1 holds y = `at`.
/// The other coordinate must fall within [lo, hi] at the hit point.
pub fn ray_axis_segment(origin: Vec2, dir: Vec2, axis: usize, at: f64, lo: f64, hi: f64) -> Option<f64> {
    let (o_fixed, o_free, d_fixed, d_free) = match axis {
        0 => (origin.x, origin.y, dir.x, dir.y),
        _ => (origin.y, origin.x, dir.y, dir.x),
    };
    if d_fixed == 0.0 {
        return None;
    }
    let t = (at - o_fixed) / d_fixed;
    if t < 0.0 {
        return None;
    }
    let free = o_free + t * d_free;
    if free < lo || free > hi {
        return None;
    }
    Some(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_maps_into_half_open_interval() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(2.5 * PI) - 0.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn ray_hits_circle_front_face() {
        let t = ray_circle(Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(10.0, 0.0), 2.0);
        assert_eq!(t, Some(8.0));
    }

    #[test]
    fn ray_misses_circle_behind() {
        let t = ray_circle(Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(-10.0, 0.0), 2.0);
        assert_eq!(t, None);
    }

    #[test]
    fn ray_inside_circle_reports_exit() {
        let t = ray_circle(Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(0.5, 0.0), 2.0);
        assert_eq!(t, Some(2.5));
    }

    #[test]
    fn ray_segment_respects_span() {
        let t = ray_axis_segment(Vec2::new(5.0, 5.0), Vec2::new(1.0, 0.0), 0, 10.0, 0.0, 20.0);
        assert_eq!(t, Some(5.0));
        let t = ray_axis_segment(Vec2::new(5.0, 5.0), Vec2::new(1.0, 0.0), 0, 10.0, 6.0, 20.0);
        assert_eq!(t, None);
    }
}
