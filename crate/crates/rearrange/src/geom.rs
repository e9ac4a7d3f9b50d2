//! Planar geometry primitives: poses on SE(2), circles, and axis-aligned bounds.

use serde::{Deserialize, Serialize};

/// Wraps an angle to the interval (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let a = (theta + std::f64::consts::PI).rem_euclid(two_pi);
    if a == 0.0 {
        std::f64::consts::PI
    } else {
        a - std::f64::consts::PI
    }
}

/// Shortest angular distance from `a` to `b`, in [0, pi].
pub fn angle_dist(a: f64, b: f64) -> f64 {
    wrap_angle(b - a).abs()
}

/// A planar pose (x, y, heading). Heading is kept in (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn identity() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            theta: 0.0,
        }
    }

    /// Composes `self` with `other` expressed in `self`'s frame.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2 {
            x: self.x + c * other.x - s * other.y,
            y: self.y + s * other.x + c * other.y,
            theta: wrap_angle(self.theta + other.theta),
        }
    }

    /// The pose that composes with `self` to the identity.
    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2 {
            x: -(c * self.x + s * self.y),
            y: -(-s * self.x + c * self.y),
            theta: wrap_angle(-self.theta),
        }
    }

    /// Euclidean distance between the translation parts.
    pub fn distance(&self, other: &Pose2) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    /// Shortest heading distance to `other`, in [0, pi].
    pub fn heading_dist(&self, other: &Pose2) -> f64 {
        angle_dist(self.theta, other.theta)
    }
}

/// A circle in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

impl Circle {
    pub fn new(x: f64, y: f64, radius: f64) -> Self {
        Self { x, y, radius }
    }

    pub fn center_dist(&self, other: &Circle) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Axis-aligned rectangle used for world bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    /// True when the whole circle lies inside the rectangle.
    pub fn contains_circle(&self, c: &Circle) -> bool {
        c.x - c.radius >= self.min_x
            && c.x + c.radius <= self.max_x
            && c.y - c.radius >= self.min_y
            && c.y + c.radius <= self.max_y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_covers_half_open_interval() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-12);
        assert!((wrap_angle(2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn compose_then_inverse_is_identity() {
        let a = Pose2::new(1.3, -2.1, 0.7);
        let b = a.compose(&a.inverse());
        assert!(b.x.abs() < 1e-12);
        assert!(b.y.abs() < 1e-12);
        assert!(b.theta.abs() < 1e-12);
    }

    #[test]
    fn compose_rotates_offset() {
        let object = Pose2::new(0.0, 0.0, PI / 2.0);
        let offset = Pose2::new(-0.6, 0.0, 0.0);
        let p = object.compose(&offset);
        assert!(p.x.abs() < 1e-12);
        assert!((p.y + 0.6).abs() < 1e-12);
        assert!((p.theta - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rect_circle_containment() {
        let r = Rect::new(0.0, 0.0, 10.0, 10.0);
        assert!(r.contains_circle(&Circle::new(5.0, 5.0, 1.0)));
        assert!(!r.contains_circle(&Circle::new(0.5, 5.0, 1.0)));
    }
}
