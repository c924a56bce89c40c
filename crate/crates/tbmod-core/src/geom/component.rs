//! Complementary components of a planar domain.
//!
//! A component is a compact connected subset of the plane.  Four shapes
//! cover everything the suites need: single points, closed disks, filled
//! simple polygons, and tripod skeletons (three polyline arms glued at a
//! branch point, optionally thickened by a sausage radius).
//!
//! Every component caches a boundary sampling (default 512 samples per unit
//! of diameter, clamped to `[64, 4096]`) together with its diameter and
//! bounding box.  Set distances involving polygon edges and skeleton
//! segments are computed on the exact segments; sample points only drive
//! pruning and brute-force cross-checks, so the stated error of any
//! sample-based quantity is `O(sample spacing)`.

use super::{dist_point_segment, dist_segment_segment, BBox, Point};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Geometric shape of a component.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    /// A single point.
    Point { at: Point },
    /// Closed disk.
    Disk { center: Point, radius: f64 },
    /// Filled simple polygon (vertices in order, implicitly closed).
    Polygon { vertices: Vec<Point> },
    /// Tripod skeleton: three polyline arms leaving a common branch point
    /// (each arm's first vertex is the branch point), thickened by
    /// `thickness ≥ 0`.
    Tripod {
        arms: [Vec<Point>; 3],
        #[serde(default)]
        thickness: f64,
    },
}

/// A component with cached sampling, diameter and bounding box.
#[derive(Clone, Debug)]
pub struct Component {
    id: String,
    shape: Shape,
    samples: Vec<Point>,
    diameter: f64,
    bbox: BBox,
}

/// Default boundary samples per unit of diameter.
pub const SAMPLES_PER_UNIT: f64 = 512.0;
const MIN_SAMPLES: usize = 64;
const MAX_SAMPLES: usize = 4096;

impl Component {
    pub fn new(id: impl Into<String>, shape: Shape) -> Result<Self> {
        Self::with_sampling(id, shape, SAMPLES_PER_UNIT)
    }

    /// Build with an explicit sampling density (samples per unit diameter).
    pub fn with_sampling(id: impl Into<String>, shape: Shape, per_unit: f64) -> Result<Self> {
        let id = id.into();
        validate_shape(&id, &shape)?;
        let diameter = exact_diameter(&shape);
        let n = ((per_unit * diameter).ceil() as usize).clamp(MIN_SAMPLES, MAX_SAMPLES);
        let samples = sample_boundary(&shape, n);
        let mut bbox = BBox::of(samples.iter().copied());
        if let Shape::Tripod { thickness, .. } = shape {
            bbox = bbox.pad(thickness);
        }
        if let Shape::Disk { center, radius } = shape {
            bbox = BBox::of([center]).pad(radius);
        }
        Ok(Component {
            id,
            shape,
            samples,
            diameter,
            bbox,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Cached diameter of the set.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    /// Cached boundary samples (skeleton samples for tripods).
    pub fn samples(&self) -> &[Point] {
        &self.samples
    }

    pub fn is_point(&self) -> bool {
        matches!(self.shape, Shape::Point { .. })
    }

    /// Distance from the point `p` to the set (0 if `p` lies in it).
    pub fn dist_to_point(&self, p: Point) -> f64 {
        match &self.shape {
            Shape::Point { at } => p.dist(*at),
            Shape::Disk { center, radius } => (p.dist(*center) - radius).max(0.0),
            Shape::Polygon { vertices } => {
                if polygon_contains(vertices, p) {
                    0.0
                } else {
                    polygon_edges(vertices)
                        .map(|(a, b)| dist_point_segment(p, a, b))
                        .fold(f64::INFINITY, f64::min)
                }
            }
            Shape::Tripod { arms, thickness } => {
                let d = arms
                    .iter()
                    .flat_map(|arm| arm.windows(2))
                    .map(|w| dist_point_segment(p, w[0], w[1]))
                    .fold(f64::INFINITY, f64::min);
                (d - thickness).max(0.0)
            }
        }
    }

    /// `(min, max)` distance from `p` over the whole set.
    pub fn range_from(&self, p: Point) -> (f64, f64) {
        match &self.shape {
            Shape::Point { at } => {
                let d = p.dist(*at);
                (d, d)
            }
            Shape::Disk { center, radius } => {
                let d = p.dist(*center);
                ((d - radius).max(0.0), d + radius)
            }
            Shape::Polygon { vertices } => {
                let max = vertices
                    .iter()
                    .map(|v| p.dist(*v))
                    .fold(0.0_f64, f64::max);
                (self.dist_to_point(p), max)
            }
            Shape::Tripod { arms, thickness } => {
                let max = arms
                    .iter()
                    .flatten()
                    .map(|v| p.dist(*v))
                    .fold(0.0_f64, f64::max)
                    + thickness;
                (self.dist_to_point(p), max)
            }
        }
    }

    /// Whether the set meets the circle `|z − c| = r`.
    pub fn meets_circle(&self, c: Point, r: f64) -> bool {
        let (lo, hi) = self.range_from(c);
        lo <= r && r <= hi
    }

    /// Whether the set meets the open disk `D(c, r)`.
    pub fn meets_open_disk(&self, c: Point, r: f64) -> bool {
        self.dist_to_point(c) < r
    }

    /// Whether the set is contained in the open disk `D(c, r)`.
    pub fn inside_open_disk(&self, c: Point, r: f64) -> bool {
        self.range_from(c).1 < r
    }

    /// Set distance to another component (0 if they meet).
    pub fn dist_to(&self, other: &Component) -> f64 {
        use Shape::*;
        match (&self.shape, &other.shape) {
            (Point { at }, _) => other.dist_to_point(*at),
            (_, Point { at }) => self.dist_to_point(*at),
            (Disk { center, radius }, Disk { center: c2, radius: r2 }) => {
                (center.dist(*c2) - radius - r2).max(0.0)
            }
            (Disk { center, radius }, _) => (other.dist_to_point(*center) - radius).max(0.0),
            (_, Disk { center, radius }) => (self.dist_to_point(*center) - radius).max(0.0),
            _ => {
                // Segment-to-segment over boundary/skeleton segments, plus
                // containment probes for the filled cases.
                if self.dist_to_point(other.samples[0]) == 0.0
                    || other.dist_to_point(self.samples[0]) == 0.0
                {
                    return 0.0;
                }
                let mut best = f64::INFINITY;
                for (a1, b1) in self.segments() {
                    for (a2, b2) in other.segments() {
                        let d = dist_segment_segment(a1, b1, a2, b2);
                        if d < best {
                            best = d;
                        }
                        if best == 0.0 {
                            return 0.0;
                        }
                    }
                }
                (best - self.thickness() - other.thickness()).max(0.0)
            }
        }
    }

    fn thickness(&self) -> f64 {
        match &self.shape {
            Shape::Tripod { thickness, .. } => *thickness,
            _ => 0.0,
        }
    }

    /// Boundary (polygon) or skeleton (tripod) segments; empty for points,
    /// and a fine polygonization for disks.
    pub fn segments(&self) -> Vec<(Point, Point)> {
        match &self.shape {
            Shape::Point { .. } => Vec::new(),
            Shape::Disk { .. } | Shape::Polygon { .. } => {
                let mut out = Vec::with_capacity(self.samples.len());
                for i in 0..self.samples.len() {
                    out.push((self.samples[i], self.samples[(i + 1) % self.samples.len()]));
                }
                if let Shape::Polygon { vertices } = &self.shape {
                    // The sampling already walks the edges in order, but use
                    // the exact edges to avoid any flattening error.
                    out = polygon_edges(vertices).collect();
                }
                out
            }
            Shape::Tripod { arms, .. } => arms
                .iter()
                .flat_map(|arm| arm.windows(2).map(|w| (w[0], w[1])))
                .collect(),
        }
    }

    /// Tripod arms if this component is a skeleton.
    pub fn tripod_arms(&self) -> Option<&[Vec<Point>; 3]> {
        match &self.shape {
            Shape::Tripod { arms, .. } => Some(arms),
            _ => None,
        }
    }

    /// Brute-force diameter over the cached samples (test oracle).
    pub fn diameter_brute_force(&self) -> f64 {
        let mut best = 0.0_f64;
        for i in 0..self.samples.len() {
            for j in (i + 1)..self.samples.len() {
                best = best.max(self.samples[i].dist(self.samples[j]));
            }
        }
        best + 2.0 * self.thickness()
    }
}

fn validate_shape(id: &str, shape: &Shape) -> Result<()> {
    let bad = |msg: String| Err(Error::invalid(format!("component `{id}`: {msg}")));
    match shape {
        Shape::Point { at } => {
            if !at.is_finite() {
                return bad("point coordinates must be finite".into());
            }
        }
        Shape::Disk { center, radius } => {
            if !center.is_finite() || !radius.is_finite() {
                return bad("disk data must be finite".into());
            }
            if *radius <= 0.0 {
                return bad(format!("disk radius must be positive, got {radius}"));
            }
        }
        Shape::Polygon { vertices } => {
            if vertices.len() < 3 {
                return bad(format!("polygon needs ≥ 3 vertices, got {}", vertices.len()));
            }
            if vertices.iter().any(|v| !v.is_finite()) {
                return bad("polygon vertices must be finite".into());
            }
        }
        Shape::Tripod { arms, thickness } => {
            if !thickness.is_finite() || *thickness < 0.0 {
                return bad(format!("thickness must be ≥ 0, got {thickness}"));
            }
            let root = arms[0].first().copied();
            for (i, arm) in arms.iter().enumerate() {
                if arm.len() < 2 {
                    return bad(format!("arm {i} needs ≥ 2 vertices"));
                }
                if arm.iter().any(|v| !v.is_finite()) {
                    return bad(format!("arm {i} has non-finite vertices"));
                }
                if arm.first().copied() != root {
                    return bad("all arms must start at the same branch point".into());
                }
                let len: f64 = arm.windows(2).map(|w| w[0].dist(w[1])).sum();
                if len <= 0.0 {
                    return bad(format!("arm {i} has zero length"));
                }
            }
        }
    }
    Ok(())
}

fn exact_diameter(shape: &Shape) -> f64 {
    match shape {
        Shape::Point { .. } => 0.0,
        Shape::Disk { radius, .. } => 2.0 * radius,
        Shape::Polygon { vertices } => max_pairwise(vertices),
        Shape::Tripod { arms, thickness } => {
            let pts: Vec<Point> = arms.iter().flatten().copied().collect();
            max_pairwise(&pts) + 2.0 * thickness
        }
    }
}

fn max_pairwise(pts: &[Point]) -> f64 {
    let mut best = 0.0_f64;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            best = best.max(pts[i].dist(pts[j]));
        }
    }
    best
}

fn sample_boundary(shape: &Shape, n: usize) -> Vec<Point> {
    match shape {
        Shape::Point { at } => vec![*at],
        Shape::Disk { center, radius } => (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * (i as f64) / (n as f64);
                *center + Point::polar(*radius, t)
            })
            .collect(),
        Shape::Polygon { vertices } => sample_polylines(
            &polygon_edges(vertices).collect::<Vec<_>>(),
            n,
            /* keep endpoints */ true,
        ),
        Shape::Tripod { arms, .. } => {
            let segs: Vec<(Point, Point)> = arms
                .iter()
                .flat_map(|arm| arm.windows(2).map(|w| (w[0], w[1])))
                .collect();
            sample_polylines(&segs, n, true)
        }
    }
}

/// Distribute `n` samples over the segments proportionally to length,
/// always keeping the segment endpoints.
fn sample_polylines(segs: &[(Point, Point)], n: usize, keep_ends: bool) -> Vec<Point> {
    let total: f64 = segs.iter().map(|(a, b)| a.dist(*b)).sum();
    let mut out = Vec::with_capacity(n + 2 * segs.len());
    for (a, b) in segs {
        let len = a.dist(*b);
        let k = if total > 0.0 {
            ((n as f64) * len / total).ceil() as usize
        } else {
            1
        }
        .max(1);
        for i in 0..k {
            out.push(a.lerp(*b, (i as f64) / (k as f64)));
        }
        if keep_ends {
            out.push(*b);
        }
    }
    out.dedup_by(|p, q| p.dist(*q) < 1e-300);
    out
}

fn polygon_edges(vertices: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    (0..vertices.len()).map(move |i| (vertices[i], vertices[(i + 1) % vertices.len()]))
}

/// Even–odd containment test (simple polygons).
pub fn polygon_contains(vertices: &[Point], p: Point) -> bool {
    let mut inside = false;
    for (a, b) in polygon_edges(vertices) {
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn disk(id: &str, cx: f64, cy: f64, r: f64) -> Component {
        Component::new(id, Shape::Disk { center: Point::new(cx, cy), radius: r }).unwrap()
    }

    #[test]
    fn diameter_matches_brute_force() {
        let c = disk("d", 0.5, -0.25, 0.75);
        let exact = c.diameter();
        let brute = c.diameter_brute_force();
        assert_relative_eq!(exact, brute, max_relative = 1e-3);
        assert_relative_eq!(exact, 1.5);

        let poly = Component::new(
            "p",
            Shape::Polygon {
                vertices: vec![
                    Point::new(0.0, 0.0),
                    Point::new(2.0, 0.0),
                    Point::new(2.0, 1.0),
                    Point::new(0.0, 1.0),
                ],
            },
        )
        .unwrap();
        assert_relative_eq!(poly.diameter(), 5.0_f64.sqrt());
        assert_relative_eq!(poly.diameter(), poly.diameter_brute_force(), epsilon = 1e-9);
    }

    #[test]
    fn distances_between_shapes() {
        let a = disk("a", 0.0, 0.0, 1.0);
        let b = disk("b", 3.0, 0.0, 1.0);
        assert_relative_eq!(a.dist_to(&b), 1.0);
        assert_eq!(a.dist_to(&a), 0.0);

        let pt = Component::new("q", Shape::Point { at: Point::new(0.0, 2.0) }).unwrap();
        assert_relative_eq!(a.dist_to(&pt), 1.0);
        assert_relative_eq!(pt.dist_to(&a), 1.0);
    }

    #[test]
    fn polygon_membership_and_distance() {
        let sq = Component::new(
            "sq",
            Shape::Polygon {
                vertices: vec![
                    Point::new(-1.0, -1.0),
                    Point::new(1.0, -1.0),
                    Point::new(1.0, 1.0),
                    Point::new(-1.0, 1.0),
                ],
            },
        )
        .unwrap();
        assert_eq!(sq.dist_to_point(Point::new(0.0, 0.0)), 0.0);
        assert_relative_eq!(sq.dist_to_point(Point::new(0.0, 2.0)), 1.0);
        let (lo, hi) = sq.range_from(Point::new(0.0, 0.0));
        assert_eq!(lo, 0.0);
        assert_relative_eq!(hi, 2.0_f64.sqrt());
    }

    #[test]
    fn circle_and_disk_predicates() {
        let a = disk("a", 2.0, 0.0, 0.5);
        assert!(a.meets_circle(Point::new(0.0, 0.0), 2.0));
        assert!(!a.meets_circle(Point::new(0.0, 0.0), 1.0));
        assert!(a.meets_open_disk(Point::new(0.0, 0.0), 1.6));
        assert!(!a.meets_open_disk(Point::new(0.0, 0.0), 1.5));
        assert!(a.inside_open_disk(Point::new(2.0, 0.0), 0.51));
        assert!(!a.inside_open_disk(Point::new(2.0, 0.0), 0.5));
    }

    #[test]
    fn tripod_skeleton_basics() {
        let arms = [
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)],
            vec![Point::new(0.0, 0.0), Point::polar(1.0, 2.0 * std::f64::consts::FRAC_PI_3)],
            vec![Point::new(0.0, 0.0), Point::polar(1.0, -2.0 * std::f64::consts::FRAC_PI_3)],
        ];
        let t = Component::new("t", Shape::Tripod { arms, thickness: 0.0 }).unwrap();
        assert_relative_eq!(t.diameter(), 3.0_f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(t.dist_to_point(Point::new(0.5, 0.5)), 0.5);
    }

    #[test]
    fn bad_shapes_rejected() {
        assert!(Component::new("x", Shape::Disk { center: Point::new(0.0, 0.0), radius: 0.0 }).is_err());
        assert!(Component::new(
            "y",
            Shape::Polygon { vertices: vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)] }
        )
        .is_err());
    }
}
