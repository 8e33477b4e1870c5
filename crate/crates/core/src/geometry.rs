//! Planar points, segments and the tolerance-aware predicates used by every
//! other module.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Default slack for geometric predicates.
pub const DEFAULT_EPS: f64 = 1e-9;
/// Default distance below which a trajectory is considered to hit a cone point.
pub const DEFAULT_CORNER: f64 = 1e-12;

/// The two tolerances used throughout the crate.
///
/// `eps` is ordinary predicate slack; `corner` is the (much tighter) distance
/// at which a trajectory is declared to run into a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub eps: f64,
    pub corner: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { eps: DEFAULT_EPS, corner: DEFAULT_CORNER }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Unit vector at angle `theta`.
    pub fn polar(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Point { x: c, y: s }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3d cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point { x: self.x + (other.x - self.x) * t, y: self.y + (other.y - self.y) * t }
    }

    /// Rotation about the origin.
    pub fn rotate(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point { x: c * self.x - s * self.y, y: s * self.x + c * self.y }
    }

    pub fn approx_eq(self, other: Point, eps: f64) -> bool {
        self.dist(other) <= eps
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point { x: self.x + o.x, y: self.y + o.y }
    }
}

impl AddAssign for Point {
    fn add_assign(&mut self, o: Point) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point { x: self.x - o.x, y: self.y - o.y }
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point { x: self.x * k, y: self.y * k }
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point { x: -self.x, y: -self.y }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub p0: Point,
    pub p1: Point,
}

impl Segment {
    pub const fn new(p0: Point, p1: Point) -> Self {
        Segment { p0, p1 }
    }

    pub fn vector(&self) -> Point {
        self.p1 - self.p0
    }

    pub fn length(&self) -> f64 {
        self.vector().norm()
    }

    pub fn at(&self, t: f64) -> Point {
        self.p0.lerp(self.p1, t)
    }

    pub fn midpoint(&self) -> Point {
        self.at(0.5)
    }

    pub fn reversed(&self) -> Segment {
        Segment { p0: self.p1, p1: self.p0 }
    }

    pub fn translate(&self, by: Point) -> Segment {
        Segment { p0: self.p0 + by, p1: self.p1 + by }
    }

    /// Direction angle of the undirected segment, folded into `[0, π)`.
    pub fn line_angle(&self) -> f64 {
        let a = self.vector().angle().rem_euclid(std::f64::consts::PI);
        // fold values within rounding of π back to 0
        if std::f64::consts::PI - a < 1e-12 {
            0.0
        } else {
            a
        }
    }

    /// Distance from `p` to the closest point of the segment.
    pub fn distance_to(&self, p: Point) -> f64 {
        let v = self.vector();
        let len2 = v.dot(v);
        if len2 == 0.0 {
            return p.dist(self.p0);
        }
        let t = ((p - self.p0).dot(v) / len2).clamp(0.0, 1.0);
        p.dist(self.at(t))
    }

    /// True when both segments lie on the same line and overlap in more than
    /// a point.
    pub fn overlaps(&self, other: &Segment, eps: f64) -> bool {
        let v = self.vector();
        let len = v.norm();
        if len < eps {
            return false;
        }
        let off0 = v.cross(other.p0 - self.p0) / len;
        let off1 = v.cross(other.p1 - self.p0) / len;
        if off0.abs() > eps || off1.abs() > eps {
            return false;
        }
        let t0 = v.dot(other.p0 - self.p0) / (len * len);
        let t1 = v.dot(other.p1 - self.p0) / (len * len);
        let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
        hi.min(1.0) - lo.max(0.0) > eps / len
    }
}

/// Parameters `(s, t)` at which the supporting lines of `a` and `b` meet,
/// i.e. `a.at(s) == b.at(t)`. `None` for (near-)parallel lines.
pub fn line_intersection_params(a: &Segment, b: &Segment) -> Option<(f64, f64)> {
    let r = a.vector();
    let q = b.vector();
    let denom = r.cross(q);
    let scale = r.norm() * q.norm();
    if scale == 0.0 || denom.abs() <= 1e-14 * scale {
        return None;
    }
    let w = b.p0 - a.p0;
    let s = w.cross(q) / denom;
    let t = w.cross(r) / denom;
    Some((s, t))
}

/// Proper crossing test: both parameters strictly inside `(0, 1)` by at
/// least `eps` (measured as a fraction of each segment).
pub fn proper_crossing(a: &Segment, b: &Segment, eps: f64) -> Option<(f64, f64)> {
    let (s, t) = line_intersection_params(a, b)?;
    if s > eps && s < 1.0 - eps && t > eps && t < 1.0 - eps {
        Some((s, t))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_of_diagonals() {
        let a = Segment::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0));
        let b = Segment::new(Point::new(0.0, 1.0), Point::new(1.0, 0.0));
        let (s, t) = proper_crossing(&a, &b, 1e-9).unwrap();
        assert!((s - 0.5).abs() < 1e-15 && (t - 0.5).abs() < 1e-15);
    }

    #[test]
    fn touching_at_endpoint_is_not_proper() {
        let a = Segment::new(Point::new(0.0, 0.0), Point::new(1.0, 0.0));
        let b = Segment::new(Point::new(1.0, 0.0), Point::new(1.0, 1.0));
        assert!(proper_crossing(&a, &b, 1e-9).is_none());
    }

    #[test]
    fn parallel_lines_do_not_meet() {
        let a = Segment::new(Point::new(0.0, 0.0), Point::new(1.0, 0.0));
        let b = Segment::new(Point::new(0.0, 1.0), Point::new(1.0, 1.0));
        assert!(line_intersection_params(&a, &b).is_none());
    }

    #[test]
    fn overlap_detection() {
        let a = Segment::new(Point::new(0.0, 0.0), Point::new(2.0, 0.0));
        let b = Segment::new(Point::new(1.5, 0.0), Point::new(0.5, 0.0));
        assert!(a.overlaps(&b, 1e-9));
        let c = Segment::new(Point::new(2.0, 0.0), Point::new(3.0, 0.0));
        assert!(!a.overlaps(&c, 1e-9));
    }

    #[test]
    fn line_angle_folds_direction() {
        let s = Segment::new(Point::new(1.0, 1.0), Point::new(0.0, 0.0));
        assert!((s.line_angle() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }
}
