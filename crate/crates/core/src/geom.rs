//! Small 2D geometry kit shared by the simulator, the mapper, and the
//! verification predicates. Everything is ground-plane math in meters.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// A 2D point or displacement in meters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Z component of the 3D cross product; positive when `other` is
    /// counterclockwise from `self`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Counterclockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        self.scale(rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// A 2D segment between two endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub const fn new(a: Vec2, b: Vec2) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(theta: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut t = theta % two_pi;
    if t <= -std::f64::consts::PI {
        t += two_pi;
    } else if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

/// Distance along a ray (origin, unit direction) to the first intersection
/// with `seg`, if any non-negative intersection exists.
pub fn ray_segment_intersection(origin: Vec2, dir: Vec2, seg: &Segment) -> Option<f64> {
    let e = seg.b - seg.a;
    let denom = dir.cross(e);
    if denom.abs() < 1e-12 {
        return None; // parallel (collinear grazing hits are ignored)
    }
    let ao = seg.a - origin;
    let t = ao.cross(e) / denom;
    let u = ao.cross(dir) / denom;
    if t >= 0.0 && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// Distance from point `p` to segment `s`.
pub fn point_segment_distance(p: Vec2, s: &Segment) -> f64 {
    let e = s.b - s.a;
    let len_sq = e.norm_sq();
    if len_sq < 1e-18 {
        return p.distance(s.a);
    }
    let t = ((p - s.a).dot(e) / len_sq).clamp(0.0, 1.0);
    p.distance(s.a + e * t)
}

/// True if segments properly or improperly intersect.
pub fn segments_intersect(s1: &Segment, s2: &Segment) -> bool {
    segment_segment_distance(s1, s2) < 1e-12
}

/// Minimum distance between two segments.
pub fn segment_segment_distance(s1: &Segment, s2: &Segment) -> f64 {
    let d1 = s1.b - s1.a;
    let d2 = s2.b - s2.a;
    let r = s1.a - s2.a;
    let denom = d1.cross(d2);
    if denom.abs() > 1e-12 {
        let t = d2.cross(r) / denom;
        let u = d1.cross(r) / denom;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            return 0.0; // crossing
        }
    }
    let mut best = point_segment_distance(s1.a, s2);
    best = best.min(point_segment_distance(s1.b, s2));
    best = best.min(point_segment_distance(s2.a, s1));
    best.min(point_segment_distance(s2.b, s1))
}

/// Point-in-polygon test by winding (even-odd); boundary points count as
/// inside within floating tolerance.
pub fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    if poly.len() < 3 {
        return false;
    }
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if point_segment_distance(p, &Segment::new(a, b)) < 1e-9 {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Distance from `p` to the boundary-or-interior of `poly` (0 when inside).
pub fn point_polygon_distance(p: Vec2, poly: &[Vec2]) -> f64 {
    if point_in_polygon(p, poly) {
        return 0.0;
    }
    polygon_edges(poly)
        .map(|e| point_segment_distance(p, &e))
        .fold(f64::INFINITY, f64::min)
}

/// Iterator over the closed edge loop of a polygon.
pub fn polygon_edges(poly: &[Vec2]) -> impl Iterator<Item = Segment> + '_ {
    let n = poly.len();
    (0..n).map(move |i| Segment::new(poly[i], poly[(i + 1) % n]))
}

/// Area-weighted centroid of a simple polygon. Falls back to the vertex mean
/// for degenerate (near-zero-area) footprints such as wall-mounted objects.
pub fn polygon_centroid(poly: &[Vec2]) -> Vec2 {
    let n = poly.len();
    let mut area2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let w = a.cross(b);
        area2 += w;
        cx += (a.x + b.x) * w;
        cy += (a.y + b.y) * w;
    }
    if area2.abs() < 1e-9 {
        let sum = poly.iter().fold(Vec2::default(), |acc, &p| acc + p);
        return sum * (1.0 / n as f64);
    }
    Vec2::new(cx / (3.0 * area2), cy / (3.0 * area2))
}

/// Minimum distance between a moving disc sweep (capsule from `from` to `to`
/// with radius 0) and a segment. The caller compares against the disc radius.
pub fn sweep_segment_distance(from: Vec2, to: Vec2, seg: &Segment) -> f64 {
    segment_segment_distance(&Segment::new(from, to), seg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ray_hits_perpendicular_segment() {
        let seg = Segment::new(Vec2::new(2.0, -1.0), Vec2::new(2.0, 1.0));
        let t = ray_segment_intersection(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), &seg);
        assert_relative_eq!(t.unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn ray_misses_segment_behind() {
        let seg = Segment::new(Vec2::new(-2.0, -1.0), Vec2::new(-2.0, 1.0));
        assert!(ray_segment_intersection(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), &seg).is_none());
    }

    #[test]
    fn segment_distance_crossing_is_zero() {
        let s1 = Segment::new(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0));
        let s2 = Segment::new(Vec2::new(0.0, -1.0), Vec2::new(0.0, 1.0));
        assert_eq!(segment_segment_distance(&s1, &s2), 0.0);
    }

    #[test]
    fn segment_distance_parallel() {
        let s1 = Segment::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0));
        let s2 = Segment::new(Vec2::new(0.0, 0.5), Vec2::new(1.0, 0.5));
        assert_relative_eq!(segment_segment_distance(&s1, &s2), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn polygon_containment_and_distance() {
        let square = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        assert!(point_in_polygon(Vec2::new(0.5, 0.5), &square));
        assert!(!point_in_polygon(Vec2::new(1.5, 0.5), &square));
        assert_relative_eq!(
            point_polygon_distance(Vec2::new(2.0, 0.5), &square),
            1.0,
            epsilon = 1e-12
        );
        assert_eq!(point_polygon_distance(Vec2::new(0.5, 0.5), &square), 0.0);
    }

    #[test]
    fn centroid_of_square() {
        let square = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 2.0),
            Vec2::new(0.0, 2.0),
        ];
        let c = polygon_centroid(&square);
        assert_relative_eq!(c.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(c.y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn angle_normalization_range() {
        for k in -20..20 {
            let t = normalize_angle(0.3 + k as f64 * std::f64::consts::TAU);
            assert!(t > -std::f64::consts::PI && t <= std::f64::consts::PI);
            assert_relative_eq!(t, 0.3, epsilon = 1e-9);
        }
        assert_relative_eq!(
            normalize_angle(-std::f64::consts::PI),
            std::f64::consts::PI,
            epsilon = 1e-12
        );
    }
}
