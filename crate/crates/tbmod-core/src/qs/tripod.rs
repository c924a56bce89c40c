//! Tripods: parametrized images of the standard three-arm set.
//!
//! The standard tripod is the union of the segments from the origin to the
//! three cube roots of unity.  A tripod in the plane is recorded as a
//! sampled parametrization: parameter points `s·e^{2πij/3}` (arm `j`,
//! `0 ≤ s ≤ 1`) together with their images.  `verify_quasitripod` measures
//! the weak quasisymmetry constant of that sampled parametrization and
//! rejects tripods with a collapsed arm.

use super::weak::{weak_qs_constant_with_cap, QsReport};
use crate::error::{Error, Result};
use crate::geom::Point;
use serde::{Deserialize, Serialize};

/// One parametrized sample: arm index, parameter in `[0,1]`, image point.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TripodSample {
    pub arm: u8,
    pub s: f64,
    pub image: Point,
}

/// A sampled tripod parametrization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tripod {
    samples: Vec<TripodSample>,
}

/// Default mesh bound for parameter coverage.
pub const DEFAULT_MESH: f64 = 0.25;

/// Relative diameter below which an image arm counts as collapsed.
pub const ARM_COLLAPSE_RATIO: f64 = 1e-9;

impl Tripod {
    /// Build from raw samples.  Requires: every arm has parameters 0 and 1,
    /// successive parameter gaps ≤ `mesh`, the three `s = 0` samples share
    /// one image (the branch point), and images are otherwise distinct.
    pub fn new(mut samples: Vec<TripodSample>, mesh: f64) -> Result<Self> {
        samples.sort_by(|a, b| (a.arm, a.s).partial_cmp(&(b.arm, b.s)).unwrap());
        let mut branch: Option<Point> = None;
        for arm in 0..3u8 {
            let arm_samples: Vec<&TripodSample> =
                samples.iter().filter(|t| t.arm == arm).collect();
            if arm_samples.is_empty() {
                return Err(Error::invalid(format!("tripod arm {arm} has no samples")));
            }
            let first = arm_samples[0];
            let last = arm_samples[arm_samples.len() - 1];
            if first.s != 0.0 || last.s != 1.0 {
                return Err(Error::invalid(format!(
                    "tripod arm {arm} must be parametrized from 0 to 1, got [{}, {}]",
                    first.s, last.s
                )));
            }
            for w in arm_samples.windows(2) {
                if w[1].s - w[0].s > mesh {
                    return Err(Error::invalid(format!(
                        "tripod arm {arm} parameter gap {} exceeds mesh {mesh}",
                        w[1].s - w[0].s
                    )));
                }
            }
            match branch {
                None => branch = Some(first.image),
                Some(b) if b == first.image => {}
                Some(_) => {
                    return Err(Error::invalid(
                        "tripod arms must share the branch-point image at s = 0",
                    ))
                }
            }
        }
        if samples.iter().any(|t| t.arm > 2) {
            return Err(Error::invalid("tripod arm index must be 0, 1 or 2"));
        }
        if samples.iter().any(|t| !t.s.is_finite() || !(0.0..=1.0).contains(&t.s)) {
            return Err(Error::invalid("tripod parameters must lie in [0,1]"));
        }
        Ok(Tripod { samples })
    }

    /// Parametrize three polyline arms by arclength fraction, `n_per_arm`
    /// samples per arm (plus the branch point).  All arms must start at the
    /// same point.
    pub fn from_polyline_arms(arms: &[Vec<Point>; 3], n_per_arm: usize) -> Result<Self> {
        let branch = arms[0]
            .first()
            .copied()
            .ok_or_else(|| Error::invalid("tripod arm 0 is empty"))?;
        let n = n_per_arm.max(2);
        let mut samples = Vec::with_capacity(3 * (n + 1));
        for (j, arm) in arms.iter().enumerate() {
            if arm.first().copied() != Some(branch) {
                return Err(Error::invalid(
                    "tripod arms must start at a common branch point",
                ));
            }
            let total: f64 = arm.windows(2).map(|w| w[0].dist(w[1])).sum();
            if !(total > 0.0) {
                return Err(Error::degenerate(format!("tripod arm {j} has zero length")));
            }
            for k in 0..=n {
                let s = k as f64 / n as f64;
                samples.push(TripodSample {
                    arm: j as u8,
                    s,
                    image: point_at_fraction(arm, s * total),
                });
            }
        }
        Tripod::new(samples, 1.0 / n as f64 + 1e-12)
    }

    /// The standard tripod itself, scaled by `c`.
    pub fn standard(c: f64, n_per_arm: usize) -> Tripod {
        let arms = [0, 1, 2].map(|j| {
            vec![
                Point::new(0.0, 0.0),
                Point::polar(c, 2.0 * std::f64::consts::PI * j as f64 / 3.0),
            ]
        });
        Tripod::from_polyline_arms(&arms, n_per_arm).expect("standard tripod is valid")
    }

    pub fn samples(&self) -> &[TripodSample] {
        &self.samples
    }

    pub fn branch_point(&self) -> Point {
        self.samples
            .iter()
            .find(|t| t.s == 0.0)
            .map(|t| t.image)
            .expect("validated tripod has s = 0 samples")
    }

    /// Image points of one arm, ordered by parameter.
    pub fn arm_images(&self, arm: u8) -> Vec<Point> {
        self.samples
            .iter()
            .filter(|t| t.arm == arm)
            .map(|t| t.image)
            .collect()
    }

    /// Diameter of the sampled image.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0_f64;
        for i in 0..self.samples.len() {
            for j in (i + 1)..self.samples.len() {
                best = best.max(self.samples[i].image.dist(self.samples[j].image));
            }
        }
        best
    }

    /// Initial direction of each arm at the branch point (unit vectors).
    pub fn arm_directions(&self) -> [Point; 3] {
        let b = self.branch_point();
        [0, 1, 2].map(|arm| {
            let imgs = self.arm_images(arm);
            let next = imgs
                .iter()
                .copied()
                .find(|p| p.dist(b) > 0.0)
                .unwrap_or(b);
            let d = next - b;
            let n = d.norm();
            if n > 0.0 {
                d / n
            } else {
                Point::new(0.0, 0.0)
            }
        })
    }
}

/// Point at arclength `len` along a polyline.
fn point_at_fraction(polyline: &[Point], len: f64) -> Point {
    let mut remaining = len.max(0.0);
    for w in polyline.windows(2) {
        let seg = w[0].dist(w[1]);
        if remaining <= seg || seg == 0.0 {
            if seg == 0.0 {
                continue;
            }
            return w[0].lerp(w[1], remaining / seg);
        }
        remaining -= seg;
    }
    *polyline.last().unwrap()
}

/// Weak-quasisymmetry report for the tripod's sampled parametrization.
/// Errors out when an image arm is collapsed (diameter below
/// `ARM_COLLAPSE_RATIO` × tripod diameter).
pub fn verify_quasitripod(tripod: &Tripod, sample_budget: usize) -> Result<QsReport> {
    let diam = tripod.diameter();
    if !(diam > 0.0) {
        return Err(Error::degenerate("tripod image has zero diameter"));
    }
    for arm in 0..3u8 {
        let imgs = tripod.arm_images(arm);
        let mut arm_diam = 0.0_f64;
        for i in 0..imgs.len() {
            for j in (i + 1)..imgs.len() {
                arm_diam = arm_diam.max(imgs[i].dist(imgs[j]));
            }
        }
        if arm_diam < ARM_COLLAPSE_RATIO * diam {
            return Err(Error::degenerate(format!(
                "tripod arm {arm} is collapsed: diameter {arm_diam:.3e} vs tripod {diam:.3e}"
            )));
        }
    }
    // Parameter plane points s·e^{2πij/3}; the branch point enters once.
    let mut pairs: Vec<(Point, Point)> = Vec::with_capacity(tripod.samples.len());
    pairs.push((Point::new(0.0, 0.0), tripod.branch_point()));
    for t in &tripod.samples {
        if t.s == 0.0 {
            continue;
        }
        let dir = Point::polar(1.0, 2.0 * std::f64::consts::PI * t.arm as f64 / 3.0);
        pairs.push((dir * t.s, t.image));
    }
    weak_qs_constant_with_cap(&pairs, sample_budget.max(3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn similarity_image_has_constant_one() {
        let t = Tripod::standard(2.5, 16);
        let report = verify_quasitripod(&t, 200).unwrap();
        assert_relative_eq!(report.h_hat, 1.0, epsilon = 1e-12);
        assert_relative_eq!(t.diameter(), 2.5 * 3.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn uneven_arms_raise_the_constant() {
        let arms = [
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)],
            vec![Point::new(0.0, 0.0), Point::polar(0.2, 2.0 * std::f64::consts::FRAC_PI_3)],
            vec![Point::new(0.0, 0.0), Point::polar(0.2, -2.0 * std::f64::consts::FRAC_PI_3)],
        ];
        let t = Tripod::from_polyline_arms(&arms, 12).unwrap();
        let report = verify_quasitripod(&t, 200).unwrap();
        assert!(report.h_hat >= 4.0, "h_hat = {}", report.h_hat);
        assert!(report.h_hat <= 10.0, "h_hat = {}", report.h_hat);
    }

    #[test]
    fn collapsed_arm_is_degenerate() {
        // Arm 2 shrinks to a microscopic (but injectively sampled) set.
        let mut tiny = Vec::new();
        for arm in 0..3u8 {
            for k in 0..=4 {
                let s = k as f64 / 4.0;
                let image = if arm == 2 {
                    Point::new(0.0, 1e-15 * s)
                } else {
                    Point::polar(s, arm as f64)
                };
                tiny.push(TripodSample { arm, s, image });
            }
        }
        let t = Tripod::new(tiny, 0.3).unwrap();
        let err = verify_quasitripod(&t, 100).unwrap_err();
        assert!(err.to_string().contains("collapsed"), "{err}");
    }

    #[test]
    fn mesh_violation_rejected() {
        let mut samples = Vec::new();
        for arm in 0..3u8 {
            for &s in &[0.0, 1.0] {
                samples.push(TripodSample { arm, s, image: Point::polar(s, arm as f64 + 0.1) });
            }
        }
        assert!(Tripod::new(samples, 0.25).is_err());
    }

    #[test]
    fn arm_directions_of_standard_tripod() {
        let t = Tripod::standard(1.0, 8);
        let dirs = t.arm_directions();
        for (j, d) in dirs.iter().enumerate() {
            let expected = Point::polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / 3.0);
            assert_relative_eq!(d.x, expected.x, epsilon = 1e-12);
            assert_relative_eq!(d.y, expected.y, epsilon = 1e-12);
        }
    }
}
