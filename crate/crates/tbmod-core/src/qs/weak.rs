//! Weak quasisymmetry constants of sampled maps.
//!
//! A map sampled at points `z_i ↦ φ(z_i)` is weakly `H`-quasisymmetric
//! when `|φ(z₂)−φ(z₁)| ≤ H·|φ(z₃)−φ(z₁)|` for every triple with
//! `|z₂−z₁| ≤ |z₃−z₁|`.  The checker scans ordered sample triples and
//! returns the exact maximum ratio over them, which is a lower bound for
//! the true constant; callers compare against requested constants with a
//! ×1.05 slack to absorb the sampling gap.  Alongside the constant it
//! accumulates the full ratio profile `η̂` (image ratio vs. source ratio).

use super::profile::Profile;
use crate::error::{Error, Result};
use crate::geom::Point;
use serde::Serialize;

/// Report of a weak-quasisymmetry scan.
#[derive(Clone, Debug, Serialize)]
pub struct QsReport {
    /// Max image ratio over triples with source ratio ≤ 1 (the weak
    /// constant witnessed by the samples).
    pub h_hat: f64,
    /// `(source, image)` pairs of the worst triple `(z₁, z₂, z₃)`.
    pub worst_triple: [(Point, Point); 3],
    /// Empirical distortion profile `η̂(t)` over all source ratios.
    pub eta_hat: Profile,
    /// Number of ordered triples scanned.
    pub triples_scanned: u64,
}

/// Default ceiling on the number of samples entering the O(n³) scan;
/// larger inputs are thinned deterministically by stride.
pub const DEFAULT_SAMPLE_CAP: usize = 320;

/// Scan all ordered triples of the sampled map with the default cap.
pub fn weak_qs_constant(samples: &[(Point, Point)]) -> Result<QsReport> {
    weak_qs_constant_with_cap(samples, DEFAULT_SAMPLE_CAP)
}

/// Same, with an explicit cap on the number of samples used.
pub fn weak_qs_constant_with_cap(
    samples: &[(Point, Point)],
    sample_cap: usize,
) -> Result<QsReport> {
    if samples.len() < 3 {
        return Err(Error::invalid(format!(
            "weak-quasisymmetry scan needs ≥ 3 samples, got {}",
            samples.len()
        )));
    }
    let thinned = thin_samples(samples, sample_cap.max(3));
    for (i, a) in thinned.iter().enumerate() {
        for b in &thinned[i + 1..] {
            if a.0 == b.0 {
                return Err(Error::invalid(format!(
                    "duplicate source sample at ({}, {})",
                    a.0.x, a.0.y
                )));
            }
            if a.1 == b.1 {
                return Err(Error::invalid(format!(
                    "map is not injective on samples: image ({}, {}) repeats",
                    a.1.x, a.1.y
                )));
            }
        }
    }

    let n = thinned.len();
    let mut h_hat = 0.0_f64;
    let mut worst = [thinned[0], thinned[1], thinned[2]];
    let mut obs: Vec<(f64, f64)> = Vec::new();
    let mut scanned = 0u64;
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            let src_ij = thinned[i].0.dist(thinned[j].0);
            let img_ij = thinned[i].1.dist(thinned[j].1);
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let src_ik = thinned[i].0.dist(thinned[k].0);
                let img_ik = thinned[i].1.dist(thinned[k].1);
                if src_ik == 0.0 || img_ik == 0.0 {
                    continue;
                }
                scanned += 1;
                let t = src_ij / src_ik;
                let v = img_ij / img_ik;
                obs.push((t, v));
                if t <= 1.0 && v > h_hat {
                    h_hat = v;
                    worst = [thinned[i], thinned[j], thinned[k]];
                }
            }
        }
    }
    Ok(QsReport {
        h_hat,
        worst_triple: worst,
        eta_hat: Profile::from_observations(obs),
        triples_scanned: scanned,
    })
}

/// Deterministic stride thinning that always keeps the first and last
/// sample.
fn thin_samples(samples: &[(Point, Point)], cap: usize) -> Vec<(Point, Point)> {
    if samples.len() <= cap {
        return samples.to_vec();
    }
    let stride = (samples.len() + cap - 1) / cap;
    let mut out: Vec<(Point, Point)> = samples.iter().copied().step_by(stride).collect();
    if *out.last().unwrap() != *samples.last().unwrap() {
        out.push(*samples.last().unwrap());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn standard_tripod_samples(n_per_arm: usize) -> Vec<Point> {
        let mut pts = vec![Point::new(0.0, 0.0)];
        for j in 0..3 {
            let dir = Point::polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / 3.0);
            for k in 1..=n_per_arm {
                pts.push(dir * (k as f64 / n_per_arm as f64));
            }
        }
        pts
    }

    #[test]
    fn identity_has_constant_one() {
        let pts = standard_tripod_samples(12);
        let samples: Vec<(Point, Point)> = pts.iter().map(|&p| (p, p)).collect();
        let report = weak_qs_constant(&samples).unwrap();
        assert_relative_eq!(report.h_hat, 1.0, epsilon = 1e-12);
        assert!(report.eta_hat.is_identity(1e-12));
    }

    #[test]
    fn positive_scaling_has_constant_one() {
        let pts = standard_tripod_samples(12);
        let samples: Vec<(Point, Point)> = pts.iter().map(|&p| (p, p * 3.5)).collect();
        let report = weak_qs_constant(&samples).unwrap();
        assert_relative_eq!(report.h_hat, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn anisotropic_stretch_on_three_points() {
        // z ↦ Re z + 2i·Im z on {0, 1, i}: the triple (0, i, 1) realizes
        // ratio |2i|/|1| = 2 with equal source distances.
        let samples = vec![
            (Point::new(0.0, 0.0), Point::new(0.0, 0.0)),
            (Point::new(1.0, 0.0), Point::new(1.0, 0.0)),
            (Point::new(0.0, 1.0), Point::new(0.0, 2.0)),
        ];
        let report = weak_qs_constant(&samples).unwrap();
        assert_relative_eq!(report.h_hat, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn similarity_invariance_of_constant() {
        use rand::Rng;
        let mut rng = crate::rng::rng(11);
        let pts: Vec<Point> = (0..24)
            .map(|_| Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        // Base map: a mild fixed shear.
        let phi = |p: Point| Point::new(p.x + 0.3 * p.y, p.y);
        let base: Vec<(Point, Point)> = pts.iter().map(|&p| (p, phi(p))).collect();
        let h0 = weak_qs_constant(&base).unwrap().h_hat;
        // Pre/post-compose with similarities: rotation+scaling+translation.
        let pre = |p: Point| p.cmul(Point::polar(2.0, 0.7)) + Point::new(5.0, -1.0);
        let post = |p: Point| p.cmul(Point::polar(0.25, -1.2)) + Point::new(-2.0, 3.0);
        let conj: Vec<(Point, Point)> = pts.iter().map(|&p| (pre(p), post(phi(p)))).collect();
        let h1 = weak_qs_constant(&conj).unwrap().h_hat;
        assert_relative_eq!(h0, h1, max_relative = 1e-10);
    }

    #[test]
    fn too_few_or_non_injective_samples_rejected() {
        let two = vec![
            (Point::new(0.0, 0.0), Point::new(0.0, 0.0)),
            (Point::new(1.0, 0.0), Point::new(1.0, 0.0)),
        ];
        assert!(weak_qs_constant(&two).is_err());
        let collapsed = vec![
            (Point::new(0.0, 0.0), Point::new(0.0, 0.0)),
            (Point::new(1.0, 0.0), Point::new(0.0, 0.0)),
            (Point::new(0.0, 1.0), Point::new(1.0, 0.0)),
        ];
        assert!(weak_qs_constant(&collapsed).is_err());
    }

    #[test]
    fn thinning_keeps_endpoints() {
        let samples: Vec<(Point, Point)> = (0..1000)
            .map(|k| {
                let p = Point::new(k as f64, (k as f64).sin());
                (p, p)
            })
            .collect();
        let thin = thin_samples(&samples, 100);
        assert!(thin.len() <= 102);
        assert_eq!(thin[0], samples[0]);
        assert_eq!(*thin.last().unwrap(), *samples.last().unwrap());
    }
}
