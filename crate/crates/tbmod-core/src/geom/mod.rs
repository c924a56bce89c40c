//! Planar and spherical geometry primitives.
//!
//! Points double as complex numbers (the plane is ℂ throughout); the chordal
//! submodule adds the point at infinity and the metric of the Riemann sphere.

pub mod chain;
pub mod chordal;
pub mod component;
pub mod domain;

pub use chain::{annulus_chain, AnnulusChain};
pub use chordal::{chordal_distance, cross_ratio, MobiusMap, SpherePoint};
pub use component::{Component, Shape};
pub use domain::{DomainReport, PlanarDomain};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A point of the plane, also read as the complex number `x + iy`.
///
/// Serializes as the two-element array `[x, y]`, which is how coordinates
/// appear everywhere in the JSON interfaces.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 2]>::deserialize(d)?;
        if !v[0].is_finite() || !v[1].is_finite() {
            return Err(D::Error::custom("coordinates must be finite"));
        }
        Ok(Point::new(v[0], v[1]))
    }
}

pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// `r·e^{iθ}`.
    pub fn polar(r: f64, theta: f64) -> Self {
        Point::new(r * theta.cos(), r * theta.sin())
    }

    pub fn norm2(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product (signed parallelogram area).
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn conj(self) -> Point {
        Point::new(self.x, -self.y)
    }

    /// Complex multiplication.
    pub fn cmul(self, other: Point) -> Point {
        Point::new(
            self.x * other.x - self.y * other.y,
            self.x * other.y + self.y * other.x,
        )
    }

    /// Complex division; caller guarantees `other != 0`.
    pub fn cdiv(self, other: Point) -> Point {
        let d = other.norm2();
        Point::new(
            (self.x * other.x + self.y * other.y) / d,
            (self.y * other.x - self.x * other.y) / d,
        )
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        self + (other - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Point {
    type Output = Point;
    fn div(self, s: f64) -> Point {
        Point::new(self.x / s, self.y / s)
    }
}

/// Distance from `p` to the segment `[a, b]`.
pub fn dist_point_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm2();
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Distance between segments `[a1, b1]` and `[a2, b2]`.
pub fn dist_segment_segment(a1: Point, b1: Point, a2: Point, b2: Point) -> f64 {
    if segments_intersect(a1, b1, a2, b2) {
        return 0.0;
    }
    dist_point_segment(a1, a2, b2)
        .min(dist_point_segment(b1, a2, b2))
        .min(dist_point_segment(a2, a1, b1))
        .min(dist_point_segment(b2, a1, b1))
}

/// Proper or touching intersection test for closed segments.
pub fn segments_intersect(a1: Point, b1: Point, a2: Point, b2: Point) -> bool {
    let d1 = (b1 - a1).cross(a2 - a1);
    let d2 = (b1 - a1).cross(b2 - a1);
    let d3 = (b2 - a2).cross(a1 - a2);
    let d4 = (b2 - a2).cross(b1 - a2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Point, a: Point, b: Point, d: f64| -> bool {
        d == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(a2, a1, b1, d1) || on(b2, a1, b1, d2) || on(a1, a2, b2, d3) || on(b1, a2, b2, d4)
}

/// Parameters `t ∈ [0,1]` where the segment `a + t(b−a)` meets the circle
/// `|z − c| = r`, in increasing order.
pub fn segment_circle_hits(a: Point, b: Point, c: Point, r: f64) -> Vec<f64> {
    let d = b - a;
    let f = a - c;
    let qa = d.norm2();
    if qa == 0.0 {
        return Vec::new();
    }
    let qb = 2.0 * f.dot(d);
    let qc = f.norm2() - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let mut out = Vec::new();
    for t in [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)] {
        if (0.0..=1.0).contains(&t) {
            out.push(t);
        }
    }
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    out
}

/// Axis-aligned bounding box, tracked as (min-corner, max-corner).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub lo: Point,
    pub hi: Point,
}

impl BBox {
    pub fn empty() -> Self {
        BBox {
            lo: Point::new(f64::INFINITY, f64::INFINITY),
            hi: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn of(points: impl IntoIterator<Item = Point>) -> Self {
        let mut b = BBox::empty();
        for p in points {
            b.include(p);
        }
        b
    }

    pub fn include(&mut self, p: Point) {
        self.lo.x = self.lo.x.min(p.x);
        self.lo.y = self.lo.y.min(p.y);
        self.hi.x = self.hi.x.max(p.x);
        self.hi.y = self.hi.y.max(p.y);
    }

    pub fn pad(&self, m: f64) -> BBox {
        BBox {
            lo: self.lo - Point::new(m, m),
            hi: self.hi + Point::new(m, m),
        }
    }

    /// Lower bound for the distance between any points of the two boxes.
    pub fn gap(&self, other: &BBox) -> f64 {
        let dx = (self.lo.x - other.hi.x).max(other.lo.x - self.hi.x).max(0.0);
        let dy = (self.lo.y - other.hi.y).max(other.lo.y - self.hi.y).max(0.0);
        (dx * dx + dy * dy).sqrt()
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.lo.x && p.x <= self.hi.x && p.y >= self.lo.y && p.y <= self.hi.y
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            lo: Point::new(self.lo.x.min(other.lo.x), self.lo.y.min(other.lo.y)),
            hi: Point::new(self.hi.x.max(other.hi.x), self.hi.y.max(other.hi.y)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn complex_ops() {
        let i = Point::new(0.0, 1.0);
        assert_eq!(i.cmul(i), Point::new(-1.0, 0.0));
        let z = Point::new(3.0, 4.0);
        assert_relative_eq!(z.cdiv(z).x, 1.0, epsilon = 1e-14);
        assert_relative_eq!(z.cdiv(z).y, 0.0, epsilon = 1e-14);
        assert_relative_eq!(z.norm(), 5.0);
    }

    #[test]
    fn segment_distance() {
        let d = dist_point_segment(Point::new(0.0, 1.0), Point::new(-1.0, 0.0), Point::new(1.0, 0.0));
        assert_relative_eq!(d, 1.0);
        // beyond the endpoint
        let d = dist_point_segment(Point::new(3.0, 4.0), Point::new(-1.0, 0.0), Point::new(0.0, 0.0));
        assert_relative_eq!(d, 5.0);
        let crossing = dist_segment_segment(
            Point::new(-1.0, -1.0),
            Point::new(1.0, 1.0),
            Point::new(-1.0, 1.0),
            Point::new(1.0, -1.0),
        );
        assert_eq!(crossing, 0.0);
    }

    #[test]
    fn circle_hits() {
        let hits = segment_circle_hits(
            Point::new(-2.0, 0.0),
            Point::new(2.0, 0.0),
            ORIGIN,
            1.0,
        );
        assert_eq!(hits.len(), 2);
        assert_relative_eq!(hits[0], 0.25);
        assert_relative_eq!(hits[1], 0.75);
    }

    #[test]
    fn bbox_gap() {
        let a = BBox::of([ORIGIN, Point::new(1.0, 1.0)]);
        let b = BBox::of([Point::new(4.0, 1.0), Point::new(5.0, 2.0)]);
        assert_relative_eq!(a.gap(&b), 3.0);
        assert_eq!(a.gap(&a), 0.0);
    }
}
