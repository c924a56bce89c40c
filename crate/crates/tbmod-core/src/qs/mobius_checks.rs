//! Cross-ratio distortion, inversion restrictions, and image-diameter
//! floors.
//!
//! * `quasimobius_distortion` scans quadruples of a sampled sphere map and
//!   builds the empirical cross-ratio distortion profile `α̂`;
//! * `inversion_restriction_check` verifies that `z ↦ 1/z` restricted to a
//!   disk at a safe distance from the origin is quasisymmetric with the
//!   linear control `η(t) = 3t`;
//! * `image_diameter_floor` evaluates the quasisymmetric floor: when the
//!   image of a subset is a definite fraction of the minimal boundary
//!   displacement, the subset itself has a definite diameter.

use super::profile::Profile;
use crate::error::{Error, Result};
use crate::geom::chordal::{cross_ratio, SpherePoint};
use crate::geom::Point;
use rand::Rng;
use serde::Serialize;

/// Empirical cross-ratio distortion profile.
#[derive(Clone, Debug, Serialize)]
pub struct DistortionProfile {
    /// `α̂(t)` = max image cross-ratio over quadruples with source ≤ t.
    pub alpha_hat: Profile,
    /// The quadruple realizing the largest excess `image / source`.
    pub worst_quadruple: [SpherePoint; 4],
    pub quadruples_scanned: u64,
}

/// Scan quadruples of a sampled sphere homeomorphism.  `budget` caps the
/// number of samples entering the O(n⁴) loop (thinned by stride).
pub fn quasimobius_distortion(
    samples: &[(SpherePoint, SpherePoint)],
    sample_budget: usize,
) -> Result<DistortionProfile> {
    if samples.len() < 4 {
        return Err(Error::invalid(format!(
            "cross-ratio distortion scan needs ≥ 4 samples, got {}",
            samples.len()
        )));
    }
    let cap = sample_budget.max(4);
    let thinned: Vec<&(SpherePoint, SpherePoint)> = if samples.len() <= cap {
        samples.iter().collect()
    } else {
        let stride = (samples.len() + cap - 1) / cap;
        samples.iter().step_by(stride).collect()
    };
    let n = thinned.len();
    let mut obs = Vec::new();
    let mut worst_excess = 0.0_f64;
    let mut worst = [thinned[0].0, thinned[1].0, thinned[2].0, thinned[3].0];
    let mut scanned = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                for l in (k + 1)..n {
                    // Cross-ratios are order-sensitive; three orderings
                    // generate the distinct values of one combination.
                    for idx in [[i, j, k, l], [i, k, j, l], [i, j, l, k]] {
                        let src = cross_ratio(
                            thinned[idx[0]].0,
                            thinned[idx[1]].0,
                            thinned[idx[2]].0,
                            thinned[idx[3]].0,
                        );
                        let img = cross_ratio(
                            thinned[idx[0]].1,
                            thinned[idx[1]].1,
                            thinned[idx[2]].1,
                            thinned[idx[3]].1,
                        );
                        scanned += 1;
                        if !src.is_finite() || !img.is_finite() || src <= 0.0 {
                            continue;
                        }
                        obs.push((src, img));
                        if img / src > worst_excess {
                            worst_excess = img / src;
                            worst = [
                                thinned[idx[0]].0,
                                thinned[idx[1]].0,
                                thinned[idx[2]].0,
                                thinned[idx[3]].0,
                            ];
                        }
                    }
                }
            }
        }
    }
    if obs.is_empty() {
        return Err(Error::degenerate(
            "no quadruple produced a finite positive cross-ratio pair",
        ));
    }
    Ok(DistortionProfile {
        alpha_hat: Profile::from_observations(obs),
        worst_quadruple: worst,
        quadruples_scanned: scanned,
    })
}

/// Verify that `z ↦ 1/z` on `D̄(w₀, s)` obeys the linear quasisymmetry
/// control `η(t) = 3t`, by sampling `triples` random triples.  Returns
/// true when no violation is found.
pub fn inversion_restriction_check(
    w0: Point,
    s: f64,
    triples: usize,
    seed: u64,
) -> Result<bool> {
    if !(s > 0.0) {
        return Err(Error::invalid(format!("disk radius must be positive, got {s}")));
    }
    if w0.norm() < 2.0 * s {
        return Err(Error::invalid(format!(
            "inversion restriction needs |w0| ≥ 2s, got |w0| = {}, s = {s}",
            w0.norm()
        )));
    }
    let mut rng = crate::rng::rng(seed);
    let inv = |z: Point| Point::new(1.0, 0.0).cdiv(z);
    let sample = |rng: &mut rand_chacha::ChaCha8Rng| -> Point {
        // Uniform over the closed disk via polar sampling.
        let r = s * rng.gen_range(0.0..1.0_f64).sqrt();
        let a = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        w0 + Point::polar(r, a)
    };
    for _ in 0..triples {
        let z1 = sample(&mut rng);
        let z2 = sample(&mut rng);
        let z3 = sample(&mut rng);
        let d12 = z1.dist(z2);
        let d13 = z1.dist(z3);
        if d13 == 0.0 {
            continue;
        }
        let t = d12 / d13;
        let i12 = inv(z1).dist(inv(z2));
        let i13 = inv(z1).dist(inv(z3));
        if i12 > 3.0 * t * i13 * (1.0 + 1e-12) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Verdict of the image-diameter floor check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FloorStatus {
    /// Hypothesis held on samples and the conclusion was verified.
    Holds,
    /// Hypothesis held but the conclusion failed (a genuine violation).
    Violated,
    /// Hypothesis could not be verified on the samples.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct FloorReport {
    pub delta_prime: f64,
    pub status: FloorStatus,
    pub set_diameter: f64,
    pub image_diameter: f64,
    pub min_boundary_displacement: f64,
}

/// The floor `δ′(δ, η̂)`: when `diam(ν(A)) ≥ δ·min_{z ∈ S(z₀,r)}
/// |ν(z) − ν(z₀)|`, then `diam(A) ≥ δ′ r`.
///
/// For an identity-like profile (similarities), both sides scale together
/// and `δ′ = δ` exactly.  In general, chaining the control through `z₀`
/// and a far boundary point gives `η(diam(A)/r) ≥ δ / (2η(1))`, so
/// `δ′ = η̂⁻¹(δ / (2η̂(1)))`.
pub fn diameter_floor_constant(eta_hat: &Profile, delta: f64) -> f64 {
    if eta_hat.is_identity(1e-9) {
        return delta;
    }
    let eta_one = eta_hat.eval(1.0);
    if eta_one <= 0.0 {
        return 0.0;
    }
    eta_hat.inverse(delta / (2.0 * eta_one))
}

/// Evaluate the floor on a sampled map.  `boundary` are samples
/// `(z, ν(z))` with `z` on the circle `S(z₀, r)`; `center_image` is
/// `ν(z₀)`; `a_samples` are `(z, ν(z))` pairs for the subset `A`.
pub fn image_diameter_floor(
    eta_hat: &Profile,
    z0: Point,
    r: f64,
    center_image: Point,
    boundary: &[(Point, Point)],
    a_samples: &[(Point, Point)],
    delta: f64,
) -> Result<FloorReport> {
    if !(r > 0.0) || !(delta > 0.0) {
        return Err(Error::invalid(format!(
            "floor check needs positive radius and δ, got r = {r}, δ = {delta}"
        )));
    }
    if boundary.len() < 4 || a_samples.len() < 2 {
        return Err(Error::invalid(
            "floor check needs ≥ 4 boundary samples and ≥ 2 subset samples",
        ));
    }
    for (z, _) in boundary {
        let off = (z.dist(z0) - r).abs();
        if off > 1e-6 * r {
            return Err(Error::invalid(format!(
                "boundary sample ({}, {}) is off the circle by {off:.3e}",
                z.x, z.y
            )));
        }
    }
    if a_samples.iter().any(|(z, _)| z.dist(z0) >= r) {
        return Err(Error::invalid("subset samples must lie inside the disk"));
    }

    let min_disp = boundary
        .iter()
        .map(|(_, w)| w.dist(center_image))
        .fold(f64::INFINITY, f64::min);
    let diam = |pts: &mut dyn Iterator<Item = Point>| -> f64 {
        let v: Vec<Point> = pts.collect();
        let mut best = 0.0_f64;
        for i in 0..v.len() {
            for j in (i + 1)..v.len() {
                best = best.max(v[i].dist(v[j]));
            }
        }
        best
    };
    let image_diameter = diam(&mut a_samples.iter().map(|&(_, w)| w));
    let set_diameter = diam(&mut a_samples.iter().map(|&(z, _)| z));
    let delta_prime = diameter_floor_constant(eta_hat, delta);

    let status = if !(min_disp > 0.0) || !image_diameter.is_finite() {
        FloorStatus::Inconclusive
    } else if image_diameter < delta * min_disp {
        // The hypothesis itself fails on the samples: nothing to conclude.
        FloorStatus::Inconclusive
    } else if set_diameter >= delta_prime * r {
        FloorStatus::Holds
    } else {
        FloorStatus::Violated
    };
    Ok(FloorReport {
        delta_prime,
        status,
        set_diameter,
        image_diameter,
        min_boundary_displacement: min_disp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qs::weak::weak_qs_constant;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn sphere_samples<F: Fn(Point) -> Point>(f: F, pts: &[Point]) -> Vec<(SpherePoint, SpherePoint)> {
        pts.iter()
            .map(|&p| (SpherePoint::Finite(p), SpherePoint::Finite(f(p))))
            .collect()
    }

    fn annulus_grid() -> Vec<Point> {
        let mut pts = Vec::new();
        for i in 0..4 {
            for j in 0..6 {
                let r = 1.0 + i as f64 / 3.0;
                let a = 2.0 * std::f64::consts::PI * j as f64 / 6.0 + 0.1 * i as f64;
                pts.push(Point::polar(r, a));
            }
        }
        pts
    }

    #[test]
    fn mobius_maps_have_identity_distortion() {
        // φ(z) = (2z + 1) / (z + 3), sampled over the annulus grid.
        let phi = |z: Point| {
            (z * 2.0 + Point::new(1.0, 0.0)).cdiv(z + Point::new(3.0, 0.0))
        };
        let samples = sphere_samples(phi, &annulus_grid());
        let profile = quasimobius_distortion(&samples, 20).unwrap();
        for &(t, v) in &profile.alpha_hat.points {
            assert_relative_eq!(v, t, max_relative = 1e-8);
        }
    }

    #[test]
    fn radial_stretch_distorts_cross_ratios() {
        // φ(z) = z|z| is a genuine quasiconformal (non-Möbius) map.
        let phi = |z: Point| z * z.norm();
        let samples = sphere_samples(phi, &annulus_grid());
        let profile = quasimobius_distortion(&samples, 20).unwrap();
        let excess = profile
            .alpha_hat
            .points
            .iter()
            .map(|&(t, v)| v / t)
            .fold(0.0_f64, f64::max);
        assert!(excess > 1.01, "max image/source ratio {excess}");
    }

    #[test]
    fn too_few_points_rejected() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let samples = sphere_samples(|z| z, &pts);
        assert!(quasimobius_distortion(&samples, 10).is_err());
    }

    #[test]
    fn inversion_obeys_linear_control() {
        assert!(inversion_restriction_check(Point::new(10.0, 0.0), 1.0, 10_000, 7).unwrap());
        // Boundary case |w0| = 2s.
        assert!(inversion_restriction_check(Point::new(2.0, 0.0), 1.0, 10_000, 7).unwrap());
        // Precondition violation.
        assert!(inversion_restriction_check(Point::new(1.0, 0.0), 1.0, 100, 7).is_err());
    }

    fn circle_samples(z0: Point, r: f64, n: usize) -> Vec<Point> {
        (0..n)
            .map(|k| z0 + Point::polar(r, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect()
    }

    #[test]
    fn identity_floor_is_delta_itself() {
        let z0 = Point::new(0.0, 0.0);
        let r = 1.0;
        let boundary: Vec<(Point, Point)> =
            circle_samples(z0, r, 16).into_iter().map(|z| (z, z)).collect();
        // A = a diameter segment: diam(A) = 1.6r, hypothesis with δ = 1.
        let a: Vec<(Point, Point)> = (0..9)
            .map(|k| {
                let z = Point::new(-0.8 + 0.2 * k as f64, 0.0);
                (z, z)
            })
            .collect();
        // z0 itself is the middle grid point of `a`, so no extra sample needed.
        let mut all = boundary.clone();
        all.extend(a.iter().copied());
        let eta = weak_qs_constant(&all).unwrap().eta_hat;
        let report = image_diameter_floor(&eta, z0, r, z0, &boundary, &a, 1.0).unwrap();
        assert_relative_eq!(report.delta_prime, 1.0, epsilon = 1e-9);
        assert_eq!(report.status, FloorStatus::Holds);
    }

    #[test]
    fn scaling_keeps_the_identity_floor() {
        let z0 = Point::new(0.0, 0.0);
        let r = 1.0;
        let nu = |z: Point| z * 2.0;
        let boundary: Vec<(Point, Point)> =
            circle_samples(z0, r, 16).into_iter().map(|z| (z, nu(z))).collect();
        let a: Vec<(Point, Point)> = (0..9)
            .map(|k| {
                let z = Point::new(-0.8 + 0.2 * k as f64, 0.0);
                (z, nu(z))
            })
            .collect();
        // z0 itself is the middle grid point of `a`, so no extra sample needed.
        let mut all = boundary.clone();
        all.extend(a.iter().copied());
        let eta = weak_qs_constant(&all).unwrap().eta_hat;
        let report = image_diameter_floor(&eta, z0, r, nu(z0), &boundary, &a, 1.0).unwrap();
        assert_relative_eq!(report.delta_prime, 1.0, epsilon = 1e-9);
        assert_eq!(report.status, FloorStatus::Holds);
    }

    #[test]
    fn inversion_floor_holds_on_a_diameter_segment() {
        // ν = 1/z on D̄(10, 1): η(t) = 3t controls the restriction.
        let z0 = Point::new(10.0, 0.0);
        let r = 1.0;
        let nu = |z: Point| Point::new(1.0, 0.0).cdiv(z);
        let boundary: Vec<(Point, Point)> =
            circle_samples(z0, r, 24).into_iter().map(|z| (z, nu(z))).collect();
        let a: Vec<(Point, Point)> = (0..17)
            .map(|k| {
                let z = Point::new(9.05 + 0.119 * k as f64, 0.0);
                (z, nu(z))
            })
            .collect();
        let mut all = boundary.clone();
        all.extend(a.iter().copied());
        all.push((z0, nu(z0)));
        let eta = weak_qs_constant(&all).unwrap().eta_hat;
        assert!(!eta.is_identity(1e-9));
        let report = image_diameter_floor(&eta, z0, r, nu(z0), &boundary, &a, 1.0).unwrap();
        assert_eq!(report.status, FloorStatus::Holds);
        assert!(report.delta_prime > 0.0);
        // δ′ from the general chain is weaker than the identity value.
        assert!(report.delta_prime < 1.0);
    }

    #[test]
    fn hypothesis_failure_is_inconclusive() {
        let z0 = Point::new(0.0, 0.0);
        let r = 1.0;
        let boundary: Vec<(Point, Point)> =
            circle_samples(z0, r, 16).into_iter().map(|z| (z, z)).collect();
        // Tiny A: the hypothesis diam(ν(A)) ≥ δ·min-displacement fails.
        let a: Vec<(Point, Point)> = (0..5)
            .map(|k| {
                let z = Point::new(1e-4 * k as f64, 0.0);
                (z, z)
            })
            .collect();
        // z0 itself is the first grid point of `a`, so no extra sample needed.
        let mut all = boundary.clone();
        all.extend(a.iter().copied());
        let eta = weak_qs_constant(&all).unwrap().eta_hat;
        let report = image_diameter_floor(&eta, z0, r, z0, &boundary, &a, 1.0).unwrap();
        assert_eq!(report.status, FloorStatus::Inconclusive);
    }

    #[test]
    fn random_triples_never_beat_inversion_control() {
        // Sharper randomized sweep across admissible (w0, s) pairs.
        let mut rng = crate::rng::rng(99);
        for _ in 0..20 {
            let s = rng.gen_range(0.1..2.0);
            let factor = rng.gen_range(2.0..5.0);
            let ang = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let w0 = Point::polar(factor * s, ang);
            assert!(inversion_restriction_check(w0, s, 500, 11).unwrap());
        }
    }
}
