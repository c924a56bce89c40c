//! Empirical monotone distortion profiles.
//!
//! Both quasisymmetry (η) and quasi-Möbius (α) verifiers produce the same
//! kind of data: pairs `(t, v)` where `t` is a source ratio (or cross-ratio)
//! and `v` the matching image ratio.  The empirical profile at `t` is the
//! maximum `v` over all observations with source ≤ `t` — a nondecreasing,
//! piecewise-linear lower estimate of the true modulus-of-distortion
//! function.

use serde::Serialize;

/// Nondecreasing piecewise-linear profile built from observed ratio pairs.
#[derive(Clone, Debug, Serialize)]
pub struct Profile {
    /// Breakpoints `(t, max v over observations with source ≤ t)`,
    /// strictly increasing in `t`, nondecreasing in the value.
    pub points: Vec<(f64, f64)>,
}

impl Profile {
    /// Build from raw `(t, v)` observations (any order, duplicates fine).
    pub fn from_observations(mut obs: Vec<(f64, f64)>) -> Profile {
        obs.retain(|&(t, v)| t.is_finite() && v.is_finite() && t > 0.0 && v >= 0.0);
        obs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut points: Vec<(f64, f64)> = Vec::with_capacity(obs.len().min(4096));
        let mut running = 0.0_f64;
        for (t, v) in obs {
            running = running.max(v);
            match points.last_mut() {
                Some(last) if last.0 == t => last.1 = running,
                _ => points.push((t, running)),
            }
        }
        // Thin collinear interior points so profiles stay small: keep any
        // point where the running maximum actually changed.
        let mut thin: Vec<(f64, f64)> = Vec::new();
        for (i, &(t, v)) in points.iter().enumerate() {
            if i == 0
                || i + 1 == points.len()
                || v > thin.last().map(|p| p.1).unwrap_or(f64::NEG_INFINITY)
            {
                thin.push((t, v));
            }
        }
        Profile { points: thin }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Evaluate at `t`: linear interpolation between breakpoints, linear
    /// from the origin below the first, constant above the last.
    pub fn eval(&self, t: f64) -> f64 {
        let pts = &self.points;
        if pts.is_empty() {
            return 0.0;
        }
        if t <= pts[0].0 {
            return pts[0].1 * (t / pts[0].0).max(0.0).min(1.0);
        }
        if t >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        let i = pts.partition_point(|p| p.0 <= t);
        let (t0, v0) = pts[i - 1];
        let (t1, v1) = pts[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Largest `t` with `eval(t) ≤ y` (monotone inverse; conservative for
    /// floors of the form `t ≥ inverse(y)`).
    pub fn inverse(&self, y: f64) -> f64 {
        let pts = &self.points;
        if pts.is_empty() || y <= 0.0 {
            return 0.0;
        }
        if y >= pts[pts.len() - 1].1 {
            return pts[pts.len() - 1].0;
        }
        if y <= pts[0].1 {
            return pts[0].0 * y / pts[0].1;
        }
        let i = pts.partition_point(|p| p.1 <= y);
        let (t0, v0) = pts[i - 1];
        let (t1, v1) = pts[i];
        if v1 == v0 {
            t0
        } else {
            t0 + (t1 - t0) * (y - v0) / (v1 - v0)
        }
    }

    /// Whether every observed pair satisfied `v = t` to within `tol`
    /// (relative for large `t`): true for identity-like distortion, i.e.
    /// similarities (η) and Möbius maps (α).
    pub fn is_identity(&self, tol: f64) -> bool {
        !self.points.is_empty()
            && self
                .points
                .iter()
                .all(|&(t, v)| (v - t).abs() <= tol * t.max(1.0))
    }

    /// Maximum observed source ratio (`None` if empty).
    pub fn max_t(&self) -> Option<f64> {
        self.points.last().map(|p| p.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn prefix_max_is_monotone() {
        let p = Profile::from_observations(vec![
            (1.0, 2.0),
            (0.5, 3.0),
            (2.0, 1.0),
            (0.5, 0.1),
        ]);
        assert_relative_eq!(p.eval(0.5), 3.0);
        assert_relative_eq!(p.eval(1.0), 3.0);
        assert_relative_eq!(p.eval(2.0), 3.0);
        let mut last = 0.0;
        for &(_, v) in &p.points {
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn identity_detection() {
        let obs: Vec<(f64, f64)> = (1..100).map(|k| (k as f64 / 10.0, k as f64 / 10.0)).collect();
        let p = Profile::from_observations(obs);
        assert!(p.is_identity(1e-12));
        let q = Profile::from_observations(vec![(1.0, 1.0), (2.0, 2.5)]);
        assert!(!q.is_identity(1e-9));
    }

    #[test]
    fn inverse_round_trip() {
        let p = Profile::from_observations(vec![(0.1, 0.2), (1.0, 1.5), (4.0, 9.0)]);
        for y in [0.1, 0.2, 1.0, 1.5, 5.0] {
            let t = p.inverse(y);
            assert!(p.eval(t) <= y + 1e-12, "eval({t}) = {} > {y}", p.eval(t));
        }
        assert_relative_eq!(p.inverse(1.5), 1.0);
    }
}
