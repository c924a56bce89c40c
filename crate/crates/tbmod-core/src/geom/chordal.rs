//! Chordal metric and cross-ratio on the Riemann sphere.
//!
//! The chordal distance between `z, w ∈ ℂ ∪ {∞}` is
//!
//! ```text
//! q(z, w) = |z − w| / (√(1+|z|²) √(1+|w|²)),      q(z, ∞) = 1 / √(1+|z|²),
//! ```
//!
//! i.e. the straight-line distance of the stereographic images on a sphere of
//! diameter 1.  The absolute cross-ratio used for quasi-Möbius estimates is
//!
//! ```text
//! [z₁,z₂,z₃,z₄] = q(z₁,z₂) q(z₃,z₄) / (q(z₁,z₃) q(z₂,z₄)),
//! ```
//!
//! which is invariant under Möbius transformations.

use super::Point;
use serde::{Deserialize, Serialize};

/// A point of the sphere `ℂ ∪ {∞}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SpherePoint {
    Finite(Point),
    Infinity,
}

impl SpherePoint {
    pub fn finite(x: f64, y: f64) -> Self {
        SpherePoint::Finite(Point::new(x, y))
    }

    pub fn as_finite(self) -> Option<Point> {
        match self {
            SpherePoint::Finite(p) => Some(p),
            SpherePoint::Infinity => None,
        }
    }
}

impl From<Point> for SpherePoint {
    fn from(p: Point) -> Self {
        SpherePoint::Finite(p)
    }
}

/// Chordal distance `q(z, w)`; symmetric, bounded by 1, vanishing iff `z = w`.
pub fn chordal_distance(z: SpherePoint, w: SpherePoint) -> f64 {
    use SpherePoint::*;
    match (z, w) {
        (Infinity, Infinity) => 0.0,
        (Finite(p), Infinity) | (Infinity, Finite(p)) => 1.0 / (1.0 + p.norm2()).sqrt(),
        (Finite(p), Finite(q)) => {
            p.dist(q) / ((1.0 + p.norm2()).sqrt() * (1.0 + q.norm2()).sqrt())
        }
    }
}

/// Absolute cross-ratio `[z₁,z₂,z₃,z₄]` in chordal form.
///
/// Degenerate quadruples collapse to `0` or `∞` rather than NaN: a vanishing
/// denominator with nonzero numerator gives `∞`; if numerator and denominator
/// both vanish the quadruple carries no information and `0` is returned.
pub fn cross_ratio(z1: SpherePoint, z2: SpherePoint, z3: SpherePoint, z4: SpherePoint) -> f64 {
    let num = chordal_distance(z1, z2) * chordal_distance(z3, z4);
    let den = chordal_distance(z1, z3) * chordal_distance(z2, z4);
    if den == 0.0 {
        if num == 0.0 {
            return 0.0;
        }
        return f64::INFINITY;
    }
    num / den
}

/// Möbius transformation `z ↦ (az + b)/(cz + d)`, `ad − bc ≠ 0`, with the
/// usual conventions at `∞` and at the pole `−d/c`.
#[derive(Clone, Copy, Debug)]
pub struct MobiusMap {
    pub a: Point,
    pub b: Point,
    pub c: Point,
    pub d: Point,
}

impl MobiusMap {
    pub fn new(a: Point, b: Point, c: Point, d: Point) -> Self {
        MobiusMap { a, b, c, d }
    }

    /// The identity map.
    pub fn identity() -> Self {
        MobiusMap::new(
            Point::new(1.0, 0.0),
            Point::new(0.0, 0.0),
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
        )
    }

    /// `z ↦ αz + β` as a Möbius map.
    pub fn affine(alpha: Point, beta: Point) -> Self {
        MobiusMap::new(alpha, beta, Point::new(0.0, 0.0), Point::new(1.0, 0.0))
    }

    /// `z ↦ 1/z`.
    pub fn inversion() -> Self {
        MobiusMap::new(
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 0.0),
        )
    }

    pub fn apply(&self, z: SpherePoint) -> SpherePoint {
        match z {
            SpherePoint::Infinity => {
                if self.c.norm2() == 0.0 {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::Finite(self.a.cdiv(self.c))
                }
            }
            SpherePoint::Finite(p) => {
                let den = self.c.cmul(p) + self.d;
                if den.norm2() == 0.0 {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::Finite((self.a.cmul(p) + self.b).cdiv(den))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn chordal_reference_values() {
        // q(0, ∞) = 1 and q(1, −1) = 1: both pairs are antipodal.
        assert_relative_eq!(
            chordal_distance(SpherePoint::finite(0.0, 0.0), SpherePoint::Infinity),
            1.0
        );
        assert_relative_eq!(
            chordal_distance(SpherePoint::finite(1.0, 0.0), SpherePoint::finite(-1.0, 0.0)),
            1.0
        );
        assert_eq!(
            chordal_distance(SpherePoint::Infinity, SpherePoint::Infinity),
            0.0
        );
    }

    #[test]
    fn cross_ratio_reference_value() {
        // [0, 1, ∞, 2] = 1.
        let v = cross_ratio(
            SpherePoint::finite(0.0, 0.0),
            SpherePoint::finite(1.0, 0.0),
            SpherePoint::Infinity,
            SpherePoint::finite(2.0, 0.0),
        );
        assert_relative_eq!(v, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_quadruples_do_not_nan() {
        let z = SpherePoint::finite(0.3, -0.4);
        let w = SpherePoint::finite(1.0, 2.0);
        // z1 = z3 with distinct others: denominator 0, numerator > 0.
        assert_eq!(cross_ratio(z, w, z, SpherePoint::Infinity), f64::INFINITY);
        // fully collapsed quadruple: 0/0 ↦ 0.
        assert_eq!(cross_ratio(z, z, z, z), 0.0);
        // z1 = z2: plain zero.
        assert_eq!(cross_ratio(z, z, w, SpherePoint::Infinity), 0.0);
    }

    #[test]
    fn mobius_pole_and_infinity() {
        let inv = MobiusMap::inversion();
        assert_eq!(inv.apply(SpherePoint::finite(0.0, 0.0)), SpherePoint::Infinity);
        assert_eq!(
            inv.apply(SpherePoint::Infinity),
            SpherePoint::finite(0.0, 0.0)
        );
        let z = inv.apply(SpherePoint::finite(0.0, 2.0));
        assert_relative_eq!(z.as_finite().unwrap().y, -0.5);
    }
}
