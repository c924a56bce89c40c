//! Packing counts and the constructive disjoint-tripod bound.
//!
//! `packing_count` counts components of diameter ≥ r meeting the open disk
//! `D(z₀, r)` — the quantity the packing condition bounds uniformly.
//!
//! `tripod_packing_bound(M, H)` returns a constructive `N` such that any
//! family of pairwise disjoint `H`-quasitripods of diameter ≥ r inside
//! `D(z₀, Mr)` has at most `N` members.  The bound follows the cover
//! argument: `D(z₀, Mr)` is covered by `⌈100(M/δ)²⌉` disks `D_k` of radius
//! `δr`; every tripod centered in `D_k` sends all three branches out of
//! the doubled disk `B_k = 2D_k`, and its exit points cut `∂B_k` into
//! three arcs of length ≥ `θr`.  Disjoint tripods nest inside each other's
//! sectors, so each new tripod claims ≥ `θr` of fresh arc length, giving
//! at most `⌈4πδ/θ⌉` tripods per cover disk.  The constants `δ(H)` and
//! `θ(H)` have no closed form; they are realized as sampled minima over a
//! deterministic calibration family of `H`-graded tripods (arm-length
//! ratios down to `1/H`, arm bends growing with `H`), evaluated over
//! rotations and center placements.

use super::tripod::Tripod;
use crate::error::{Error, Result};
use crate::geom::component::Component;
use crate::geom::domain::PlanarDomain;
use crate::geom::{segment_circle_hits, Point};
use std::f64::consts::PI;

/// Number of components with diameter ≥ r meeting the open disk D(z₀, r).
pub fn packing_count(dom: &PlanarDomain, z0: Point, r: f64) -> Result<usize> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("packing radius must be positive, got {r}")));
    }
    Ok(dom
        .components()
        .iter()
        .filter(|c| c.diameter() >= r && c.dist_to_point(z0) < r)
        .count())
}

/// Same count against an explicit component list.
pub fn packing_count_components(components: &[Component], z0: Point, r: f64) -> usize {
    components
        .iter()
        .filter(|c| c.diameter() >= r && c.dist_to_point(z0) < r)
        .count()
}

/// Calibrated constants `(δ, θ)` for constant `H`: every calibration
/// tripod of diameter 1 centered in a radius-δ disk sends all branches out
/// of the doubled disk, and its exit arcs have length ≥ θ.
pub fn packing_calibration(h: f64) -> (f64, f64) {
    let family = calibration_family(h);
    // δ: branches exit B_k when the shortest branch reach exceeds 3δ
    // (reach from the center minus the center's offset inside D_k).
    let mut reach_min = f64::INFINITY;
    for member in &family {
        for arm in &member.arms {
            let reach = arm
                .iter()
                .map(|p| p.norm())
                .fold(0.0_f64, f64::max);
            reach_min = reach_min.min(reach);
        }
    }
    let delta = reach_min / 3.0 * 0.999;

    // θ: minimum exit-arc length over members × rotations × placements.
    let mut min_gap = f64::INFINITY;
    let offsets = [
        Point::new(0.0, 0.0),
        Point::new(0.9 * delta, 0.0),
        Point::new(-0.9 * delta, 0.0),
        Point::new(0.0, 0.9 * delta),
        Point::new(0.0, -0.9 * delta),
    ];
    for member in &family {
        for rot in 0..12 {
            let phi = rot as f64 * (2.0 * PI / 3.0) / 12.0;
            for &offset in &offsets {
                if let Some(gap) = min_exit_gap(member, phi, offset, 2.0 * delta) {
                    min_gap = min_gap.min(gap);
                }
            }
        }
    }
    let theta = 2.0 * delta * min_gap * 0.999;
    (delta, theta)
}

/// Constructive bound on disjoint `H`-quasitripods of diameter ≥ r in
/// `D(z₀, Mr)`; monotone nondecreasing in both arguments.
pub fn tripod_packing_bound(m: f64, h: f64) -> Result<u64> {
    if !(m >= 1.0) || !(h >= 1.0) {
        return Err(Error::invalid(format!(
            "packing bound needs M, H ≥ 1, got M = {m}, H = {h}"
        )));
    }
    let (delta, theta) = packing_calibration(h);
    let cover = (100.0 * (m / delta).powi(2)).ceil();
    let per_disk = (4.0 * PI * delta / theta).ceil();
    Ok((cover * per_disk) as u64)
}

/// One calibration member: three polyline arms from the origin, scaled to
/// diameter 1.
struct CalibrationMember {
    arms: [Vec<Point>; 3],
}

/// Deterministic family graded by `H`: straight arms with length ratios
/// (1,1,1), (1,1,1/H), (1,1/√H,1/H), each with bends 0 and ±50°·(1−1/H)
/// placed an eighth of the way along the arm (inside the doubled disk for
/// the short arms).
fn calibration_family(h: f64) -> Vec<CalibrationMember> {
    let h = h.max(1.0);
    let ratio_sets: [[f64; 3]; 3] = [
        [1.0, 1.0, 1.0],
        [1.0, 1.0, 1.0 / h],
        [1.0, 1.0 / h.sqrt(), 1.0 / h],
    ];
    let bend_max = 50.0_f64.to_radians() * (1.0 - 1.0 / h);
    let bends = [0.0, bend_max, -bend_max];
    let mut family = Vec::new();
    for ratios in &ratio_sets {
        for &bend in &bends {
            let arms = [0usize, 1, 2].map(|j| {
                let len = ratios[j];
                let theta = 2.0 * PI * j as f64 / 3.0;
                let stub = len / 8.0;
                vec![
                    Point::new(0.0, 0.0),
                    Point::polar(stub, theta),
                    Point::polar(stub, theta) + Point::polar(len - stub, theta + bend),
                ]
            });
            family.push(normalize(CalibrationMember { arms }));
        }
    }
    family
}

fn normalize(member: CalibrationMember) -> CalibrationMember {
    let pts: Vec<Point> = member.arms.iter().flatten().copied().collect();
    let mut diam = 0.0_f64;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            diam = diam.max(pts[i].dist(pts[j]));
        }
    }
    let s = 1.0 / diam;
    CalibrationMember { arms: member.arms.map(|a| a.into_iter().map(|p| p * s).collect()) }
}

/// Minimum angular gap (radians) between the three first-exit points of
/// the member's arms on the circle of radius `circle_r` centered at the
/// origin, with the branch point placed at `offset` and arms rotated by
/// `phi`.  `None` when some arm fails to exit (never happens for the
/// calibrated δ).
fn min_exit_gap(
    member: &CalibrationMember,
    phi: f64,
    offset: Point,
    circle_r: f64,
) -> Option<f64> {
    let rot = Point::polar(1.0, phi);
    let mut angles = Vec::with_capacity(3);
    for arm in &member.arms {
        let placed: Vec<Point> = arm.iter().map(|&p| p.cmul(rot) + offset).collect();
        let mut exit: Option<Point> = None;
        'seg: for w in placed.windows(2) {
            let hits = segment_circle_hits(w[0], w[1], Point::new(0.0, 0.0), circle_r);
            if let Some(&t) = hits.first() {
                exit = Some(w[0].lerp(w[1], t));
                break 'seg;
            }
        }
        angles.push(exit?.angle());
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let g0 = angles[1] - angles[0];
    let g1 = angles[2] - angles[1];
    let g2 = 2.0 * PI - (angles[2] - angles[0]);
    Some(g0.min(g1).min(g2))
}

/// Disjointness of two tripods as skeleton sets (positive segment gap).
pub fn tripods_disjoint(a: &Tripod, b: &Tripod, gap: f64) -> bool {
    let segs = |t: &Tripod| -> Vec<(Point, Point)> {
        let mut out = Vec::new();
        for arm in 0..3u8 {
            let imgs = t.arm_images(arm);
            for w in imgs.windows(2) {
                out.push((w[0], w[1]));
            }
        }
        out
    };
    let sa = segs(a);
    let sb = segs(b);
    sa.iter().all(|&(p, q)| {
        sb.iter()
            .all(|&(u, v)| crate::geom::dist_segment_segment(p, q, u, v) > gap)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::component::Shape;
    use rand::Rng;

    fn unit_disks_at(xs: &[f64]) -> PlanarDomain {
        let comps = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                Component::new(
                    format!("d{i}"),
                    Shape::Disk { center: Point::new(x, 0.0), radius: 1.0 },
                )
                .unwrap()
            })
            .collect();
        PlanarDomain::new(comps, true).unwrap()
    }

    #[test]
    fn packing_count_examples() {
        let empty = PlanarDomain::new(vec![], true).unwrap();
        assert_eq!(packing_count(&empty, Point::new(0.0, 0.0), 1.0).unwrap(), 0);

        let dom = unit_disks_at(&[0.0, 3.0, 6.0]);
        assert_eq!(packing_count(&dom, Point::new(0.0, 0.0), 1.0).unwrap(), 1);
        // All three disks meet D(3, 4), but none has diameter ≥ 4, so the
        // diameter filter leaves nothing.
        assert_eq!(packing_count(&dom, Point::new(3.0, 0.0), 4.0).unwrap(), 0);
        // A probe between the first two disks sees both of them.
        assert_eq!(packing_count(&dom, Point::new(1.5, 0.0), 1.9).unwrap(), 2);
        // The disk test is strict: at r = 2 the outer disks sit at distance
        // exactly 2 from the probe center, so only the middle one counts.
        assert_eq!(packing_count(&dom, Point::new(3.0, 0.0), 2.0).unwrap(), 1);
    }

    #[test]
    fn packing_count_similarity_invariance() {
        let dom = unit_disks_at(&[0.0, 3.0, 6.0]);
        // σ(z) = 5z + 7i: disks of radius 5 at 0, 15, 30 (shifted up).
        let scaled = PlanarDomain::new(
            (0..3)
                .map(|i| {
                    Component::new(
                        format!("d{i}"),
                        Shape::Disk {
                            center: Point::new(15.0 * i as f64, 7.0),
                            radius: 5.0,
                        },
                    )
                    .unwrap()
                })
                .collect(),
            true,
        )
        .unwrap();
        for (z0, r) in [(0.0, 1.0), (3.0, 2.0), (3.0, 4.0), (1.5, 0.7)] {
            let base = packing_count(&dom, Point::new(z0, 0.0), r).unwrap();
            let image =
                packing_count(&scaled, Point::new(5.0 * z0, 7.0), 5.0 * r).unwrap();
            assert_eq!(base, image, "z0 = {z0}, r = {r}");
        }
    }

    #[test]
    fn calibration_constants_are_sane() {
        let (delta, theta) = packing_calibration(1.0);
        assert!(delta > 0.0 && delta < 1.0, "delta = {delta}");
        assert!(theta > 0.0 && theta < 2.0 * PI * 2.0 * delta, "theta = {theta}");
        // Straight equal arms: exits stay ≥ 120° − 2·asin(0.45) apart.
        let expected_gap_floor = (120.0_f64).to_radians() - 2.0 * 0.45_f64.asin() - 0.05;
        assert!(theta / (2.0 * delta) >= expected_gap_floor);
    }

    #[test]
    fn bound_is_positive_and_monotone() {
        assert!(tripod_packing_bound(1.0, 1.0).unwrap() >= 1);
        let grid = [1.0, 1.5, 2.0, 4.0, 8.0, 16.0];
        for &h in &grid {
            for &m in &grid {
                let n = tripod_packing_bound(m, h).unwrap();
                for &m2 in grid.iter().filter(|&&x| x >= m) {
                    let v = tripod_packing_bound(m2, h).unwrap();
                    assert!(v >= n, "N({m2},{h}) = {v} < N({m},{h}) = {n}");
                }
                for &h2 in grid.iter().filter(|&&x| x >= h) {
                    let v = tripod_packing_bound(m, h2).unwrap();
                    assert!(v >= n, "N({m},{h2}) = {v} < N({m},{h}) = {n}");
                }
            }
        }
        assert!(tripod_packing_bound(0.5, 1.0).is_err());
    }

    #[test]
    fn random_disjoint_similarity_tripods_stay_below_the_bound() {
        // Rejection-sample disjoint equal-arm tripods with diameter ≥ r
        // inside D(0, 4r); the accepted count must respect N(4, 1).
        let r = 1.0;
        let mut rng = crate::rng::rng(2024);
        let mut accepted: Vec<Tripod> = Vec::new();
        let mut attempts = 0;
        while accepted.len() < 200 && attempts < 4000 {
            attempts += 1;
            let arm = rng.gen_range(1.0..1.3) * r / 3.0_f64.sqrt();
            let rot = rng.gen_range(0.0..2.0 * PI / 3.0);
            let rad = rng.gen_range(0.0..(4.0 * r - arm));
            let ang = rng.gen_range(0.0..2.0 * PI);
            let center = Point::polar(rad, ang);
            let arms = [0, 1, 2].map(|j| {
                vec![center, center + Point::polar(arm, rot + 2.0 * PI * j as f64 / 3.0)]
            });
            let t = Tripod::from_polyline_arms(&arms, 4).unwrap();
            if t.diameter() >= r && accepted.iter().all(|u| tripods_disjoint(&t, u, 1e-9)) {
                accepted.push(t);
            }
        }
        let n = tripod_packing_bound(4.0, 1.0).unwrap();
        assert!(
            (accepted.len() as u64) <= n,
            "{} disjoint tripods exceed the bound {n}",
            accepted.len()
        );
        // The experiment must be non-trivial.
        assert!(accepted.len() >= 5, "only {} tripods accepted", accepted.len());
    }
}
