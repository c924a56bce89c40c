//! Spread probes: tripods of definite diameter inside every disk.
//!
//! A set is `H`-spread when every disk `D(z₀, r)` centered on it (with
//! `r` below the set's diameter) contains an `H`-quasitripod of diameter
//! at least `r/H`.  The extractor places an equal-arm Y at the deepest
//! interior point of the clipped component, grows the arms to the largest
//! common length that stays inside, and tries a fan of rotations; skeleton
//! components are clipped along their own arms instead.  Equal straight
//! arms at 120° make the found tripod an exact similarity image of the
//! standard tripod, so its own weak constant is 1 and the probe succeeds
//! exactly when the diameter floor is met.

use super::tripod::{verify_quasitripod, Tripod};
use crate::error::{Error, Result};
use crate::geom::component::{Component, Shape};
use crate::geom::{segment_circle_hits, Point};
use serde::{Deserialize, Serialize};

/// One probe: a disk centered on (or near) the component.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SpreadProbe {
    pub center: Point,
    pub r: f64,
}

/// Outcome of a single probe.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ProbeStatus {
    Success {
        #[serde(skip)]
        tripod: Tripod,
        diameter: f64,
        h_qs: f64,
        /// max(h_qs, r / diameter): the probe's achieved constant.
        achieved: f64,
    },
    Failure {
        reason: String,
    },
    Skipped {
        notice: String,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeOutcome {
    pub probe: SpreadProbe,
    #[serde(flatten)]
    pub status: ProbeStatus,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpreadReport {
    pub requested_h: f64,
    /// Max achieved constant over successful probes (None when none).
    pub h_hat: Option<f64>,
    pub outcomes: Vec<ProbeOutcome>,
    /// True when every non-skipped probe succeeded.
    pub all_ok: bool,
}

/// Extraction tuning.
#[derive(Clone, Copy, Debug)]
pub struct SpreadConfig {
    /// Minimum pairwise angle between arm directions, degrees.  Collinear
    /// (degenerate-angle) tripods are rejected by default.
    pub min_arm_angle_deg: f64,
    /// Rotations of the Y tried over a 120° period.
    pub rotations: usize,
    /// Grid resolution for the deepest-point search.
    pub grid: usize,
    /// Samples per arm in the returned tripod.
    pub samples_per_arm: usize,
}

impl Default for SpreadConfig {
    fn default() -> Self {
        SpreadConfig { min_arm_angle_deg: 10.0, rotations: 12, grid: 40, samples_per_arm: 16 }
    }
}

/// Verification slack on weak constants (sample maxima are lower bounds).
pub const H_SLACK: f64 = 1.05;

/// Run all probes against a component.
pub fn spread_check(
    component: &Component,
    h: f64,
    probes: &[SpreadProbe],
    config: &SpreadConfig,
) -> Result<SpreadReport> {
    if component.is_point() {
        return Err(Error::invalid(format!(
            "component `{}` is a point; spread probes need a non-point set",
            component.id()
        )));
    }
    if !(h >= 1.0) {
        return Err(Error::invalid(format!("spread constant must be ≥ 1, got {h}")));
    }
    let diam = component.diameter();
    let mut outcomes = Vec::with_capacity(probes.len());
    let mut h_hat: Option<f64> = None;
    let mut all_ok = true;
    for &probe in probes {
        let status = if !(probe.r > 0.0) {
            ProbeStatus::Skipped { notice: format!("radius {} is not positive", probe.r) }
        } else if probe.r >= diam {
            ProbeStatus::Skipped {
                notice: format!(
                    "radius {} is not below the component diameter {diam}",
                    probe.r
                ),
            }
        } else {
            match extract_tripod(component, probe, h, config) {
                Ok(tripod) => {
                    let report = verify_quasitripod(&tripod, 120)?;
                    let diameter = tripod.diameter();
                    let achieved = report.h_hat.max(probe.r / diameter);
                    if report.h_hat <= H_SLACK * h && diameter >= probe.r / h {
                        h_hat = Some(h_hat.map_or(achieved, |v: f64| v.max(achieved)));
                        ProbeStatus::Success {
                            tripod,
                            diameter,
                            h_qs: report.h_hat,
                            achieved,
                        }
                    } else {
                        all_ok = false;
                        ProbeStatus::Failure {
                            reason: format!(
                                "best tripod has diameter {diameter:.6e} (need ≥ {:.6e}) \
                                 and constant {:.3} (allowed {:.3})",
                                probe.r / h,
                                report.h_hat,
                                H_SLACK * h
                            ),
                        }
                    }
                }
                Err(e) => {
                    all_ok = false;
                    ProbeStatus::Failure { reason: e.to_string() }
                }
            }
        };
        outcomes.push(ProbeOutcome { probe, status });
    }
    Ok(SpreadReport { requested_h: h, h_hat, outcomes, all_ok })
}

/// Distance from an interior point to the complement of the component
/// (0 when outside or on the boundary).
fn interior_clearance(component: &Component, p: Point) -> f64 {
    match component.shape() {
        Shape::Point { .. } => 0.0,
        Shape::Disk { center, radius } => (radius - p.dist(*center)).max(0.0),
        Shape::Polygon { vertices } => {
            if crate::geom::component::polygon_contains(vertices, p) {
                let mut d = f64::INFINITY;
                for i in 0..vertices.len() {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % vertices.len()];
                    d = d.min(crate::geom::dist_point_segment(p, a, b));
                }
                d
            } else {
                0.0
            }
        }
        Shape::Tripod { arms, thickness } => {
            let d = arms
                .iter()
                .flat_map(|arm| arm.windows(2))
                .map(|w| crate::geom::dist_point_segment(p, w[0], w[1]))
                .fold(f64::INFINITY, f64::min);
            (thickness - d).max(0.0)
        }
    }
}

fn extract_tripod(
    component: &Component,
    probe: SpreadProbe,
    _h: f64,
    config: &SpreadConfig,
) -> Result<Tripod> {
    // Skeleton components: clip the skeleton's own arms to the probe disk.
    if let Shape::Tripod { arms, .. } = component.shape() {
        if let Some(t) = clip_skeleton(arms, probe, config)? {
            return Ok(t);
        }
    }
    pocket_tripod(component, probe, config)
}

/// Clip a skeleton's arms at their first exit from the probe disk.
/// Returns Ok(None) when the branch point is outside the disk.
fn clip_skeleton(
    arms: &[Vec<Point>; 3],
    probe: SpreadProbe,
    config: &SpreadConfig,
) -> Result<Option<Tripod>> {
    let branch = arms[0][0];
    let clip_r = probe.r * (1.0 - 1e-9);
    if branch.dist(probe.center) >= clip_r {
        return Ok(None);
    }
    let mut clipped: [Vec<Point>; 3] = [vec![branch], vec![branch], vec![branch]];
    for (j, arm) in arms.iter().enumerate() {
        // Walk from the branch point; the running endpoint stays strictly
        // inside the clip circle, so the first hit on any segment is the
        // arm's first exit.
        'walk: for w in arm.windows(2) {
            let hits = segment_circle_hits(w[0], w[1], probe.center, clip_r);
            if let Some(&t) = hits.first() {
                let p = w[0].lerp(w[1], t);
                if p.dist(*clipped[j].last().unwrap()) > 0.0 {
                    clipped[j].push(p);
                }
                break 'walk;
            }
            clipped[j].push(w[1]);
        }
        if clipped[j].len() < 2 {
            return Err(Error::degenerate(format!(
                "skeleton arm {j} has no extent inside the probe disk"
            )));
        }
    }
    let tripod = Tripod::from_polyline_arms(&clipped, config.samples_per_arm)?;
    check_arm_angles(&tripod, config.min_arm_angle_deg)?;
    Ok(Some(tripod))
}

fn check_arm_angles(tripod: &Tripod, min_deg: f64) -> Result<()> {
    let dirs = tripod.arm_directions();
    for i in 0..3 {
        for j in (i + 1)..3 {
            let dot = dirs[i].dot(dirs[j]).clamp(-1.0, 1.0);
            let angle = dot.acos().to_degrees();
            if angle < min_deg {
                return Err(Error::degenerate(format!(
                    "arm directions {i} and {j} are {angle:.2}° apart (minimum {min_deg}°)"
                )));
            }
        }
    }
    Ok(())
}

/// Equal-arm Y at the deepest interior point of `component ∩ D(z₀, r)`.
fn pocket_tripod(
    component: &Component,
    probe: SpreadProbe,
    config: &SpreadConfig,
) -> Result<Tripod> {
    let bb = component.bbox();
    let lo = Point::new(
        bb.lo.x.max(probe.center.x - probe.r),
        bb.lo.y.max(probe.center.y - probe.r),
    );
    let hi = Point::new(
        bb.hi.x.min(probe.center.x + probe.r),
        bb.hi.y.min(probe.center.y + probe.r),
    );
    if lo.x > hi.x || lo.y > hi.y {
        return Err(Error::degenerate(
            "component does not meet the probe disk",
        ));
    }
    let g = config.grid.max(4);
    let clearance = |p: Point| -> f64 {
        let inside_disk = probe.r - p.dist(probe.center);
        if inside_disk <= 0.0 {
            return 0.0;
        }
        interior_clearance(component, p).min(inside_disk)
    };
    let mut best = (0.0_f64, probe.center);
    for iy in 0..=g {
        for ix in 0..=g {
            let p = Point::new(
                lo.x + (hi.x - lo.x) * ix as f64 / g as f64,
                lo.y + (hi.y - lo.y) * iy as f64 / g as f64,
            );
            let c = clearance(p);
            if c > best.0 {
                best = (c, p);
            }
        }
    }
    if best.0 <= 0.0 {
        return Err(Error::degenerate(
            "no interior point of the component inside the probe disk",
        ));
    }
    let center = best.1;
    // Grow the arms: for each rotation, the common arm length is the
    // largest L with all three segments inside the intersection.
    let seg_ok = |dir: Point, len: f64| -> bool {
        (1..=16).all(|k| clearance(center + dir * (len * k as f64 / 16.0)) > 0.0)
    };
    let mut best_rot = (0.0_f64, 0.0_f64); // (arm length, angle)
    for i in 0..config.rotations.max(1) {
        let phi = (i as f64) * (2.0 * std::f64::consts::PI / 3.0)
            / (config.rotations.max(1) as f64);
        let dirs = [0, 1, 2]
            .map(|j| Point::polar(1.0, phi + 2.0 * std::f64::consts::PI * j as f64 / 3.0));
        // Bisect the common length between the safe inscribed value and
        // the probe diameter.
        let mut lo_len = best.0 * 0.9;
        let mut hi_len = 2.0 * probe.r;
        if !dirs.iter().all(|&d| seg_ok(d, lo_len)) {
            lo_len = 0.0;
        }
        for _ in 0..40 {
            let mid = 0.5 * (lo_len + hi_len);
            if dirs.iter().all(|&d| seg_ok(d, mid)) {
                lo_len = mid;
            } else {
                hi_len = mid;
            }
        }
        if lo_len > best_rot.0 {
            best_rot = (lo_len, phi);
        }
    }
    let arm = best_rot.0 * 0.98;
    if !(arm > 0.0) {
        return Err(Error::degenerate(
            "no room for three arms at the deepest point",
        ));
    }
    let arms = [0, 1, 2].map(|j| {
        vec![
            center,
            center
                + Point::polar(
                    arm,
                    best_rot.1 + 2.0 * std::f64::consts::PI * j as f64 / 3.0,
                ),
        ]
    });
    let tripod = Tripod::from_polyline_arms(&arms, config.samples_per_arm)?;
    check_arm_angles(&tripod, config.min_arm_angle_deg)?;
    Ok(tripod)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(r: f64) -> Component {
        Component::new("c", Shape::Disk { center: Point::new(0.0, 0.0), radius: r }).unwrap()
    }

    #[test]
    fn disk_probes_succeed_with_small_constant() {
        let c = disk(1.0);
        let probes = vec![
            SpreadProbe { center: Point::new(0.0, 0.0), r: 1.0 },
            SpreadProbe { center: Point::new(0.9, 0.0), r: 0.5 },
            SpreadProbe { center: Point::new(1.0, 0.0), r: 1.9 }, // boundary center
        ];
        let report = spread_check(&c, 4.0, &probes, &SpreadConfig::default()).unwrap();
        assert!(report.all_ok, "{:?}", report.outcomes);
        let h = report.h_hat.unwrap();
        assert!(h <= 4.0, "achieved constant {h}");
        for o in &report.outcomes {
            if let ProbeStatus::Success { diameter, achieved, .. } = &o.status {
                assert!(*diameter >= o.probe.r / *achieved * 0.999);
            } else {
                panic!("probe should succeed: {:?}", o.status);
            }
        }
    }

    #[test]
    fn oversized_probe_is_skipped() {
        let c = disk(1.0);
        let probes = vec![SpreadProbe { center: Point::new(0.0, 0.0), r: 2.5 }];
        let report = spread_check(&c, 4.0, &probes, &SpreadConfig::default()).unwrap();
        assert!(matches!(report.outcomes[0].status, ProbeStatus::Skipped { .. }));
        assert!(report.all_ok); // skipped probes are not failures
    }

    #[test]
    fn point_component_is_a_precondition_violation() {
        let c = Component::new("pt", Shape::Point { at: Point::new(0.0, 0.0) }).unwrap();
        let err = spread_check(
            &c,
            2.0,
            &[SpreadProbe { center: Point::new(0.0, 0.0), r: 0.5 }],
            &SpreadConfig::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("point"), "{err}");
    }

    #[test]
    fn segment_like_component_fails_by_default() {
        // A 2 × 2·10⁻⁶ sliver: no room for three arms at ≥ 10° pairwise.
        let c = Component::new(
            "sliver",
            Shape::Polygon {
                vertices: vec![
                    Point::new(0.0, 0.0),
                    Point::new(2.0, 0.0),
                    Point::new(2.0, 2e-6),
                    Point::new(0.0, 2e-6),
                ],
            },
        )
        .unwrap();
        let report = spread_check(
            &c,
            4.0,
            &[SpreadProbe { center: Point::new(1.0, 0.0), r: 1.0 }],
            &SpreadConfig::default(),
        )
        .unwrap();
        assert!(!report.all_ok);
        assert!(matches!(report.outcomes[0].status, ProbeStatus::Failure { .. }));
    }

    #[test]
    fn skeleton_component_uses_its_own_arms() {
        let arms = [
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)],
            vec![Point::new(0.0, 0.0), Point::polar(1.0, 2.0 * std::f64::consts::FRAC_PI_3)],
            vec![Point::new(0.0, 0.0), Point::polar(1.0, -2.0 * std::f64::consts::FRAC_PI_3)],
        ];
        let c = Component::new("y", Shape::Tripod { arms, thickness: 0.0 }).unwrap();
        let report = spread_check(
            &c,
            4.0,
            &[SpreadProbe { center: Point::new(0.0, 0.0), r: 0.5 }],
            &SpreadConfig::default(),
        )
        .unwrap();
        assert!(report.all_ok, "{:?}", report.outcomes);
        if let ProbeStatus::Success { diameter, .. } = &report.outcomes[0].status {
            // Clipped arms reach the probe circle: diameter ≈ √3 · 0.5.
            assert!(*diameter > 0.8, "diameter {diameter}");
        } else {
            panic!("expected success");
        }
    }

    #[test]
    fn affine_images_keep_the_spread_constant() {
        // φ(z) = 2z + (1 + i) maps disks to disks; the achieved constant
        // of φ(c) at the pushed-forward probe matches c's within ×1.05.
        let c = disk(1.0);
        let image = Component::new(
            "image",
            Shape::Disk { center: Point::new(1.0, 1.0), radius: 2.0 },
        )
        .unwrap();
        let probe = SpreadProbe { center: Point::new(0.5, 0.0), r: 0.8 };
        let image_probe = SpreadProbe { center: Point::new(2.0, 1.0), r: 1.6 };
        let cfg = SpreadConfig::default();
        let r1 = spread_check(&c, 4.0, &[probe], &cfg).unwrap();
        let r2 = spread_check(&image, 4.0, &[image_probe], &cfg).unwrap();
        assert!(r1.all_ok && r2.all_ok);
        let (h1, h2) = (r1.h_hat.unwrap(), r2.h_hat.unwrap());
        assert!(h1 / h2 <= 1.05 && h2 / h1 <= 1.05, "h1 = {h1}, h2 = {h2}");
    }
}
