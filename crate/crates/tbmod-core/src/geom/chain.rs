//! Nested annulus chains around a point.
//!
//! Given a center `a`, a base radius `R` and a domain, the chain picks
//! radii `R_1 = R/10` and `R_n = R'_n / 10`, where `R'_n ≤ R_{n-1}/2` is
//! the smallest radius such that some retained component meets both
//! `S(a, R_{n-1}/2)` and `S(a, R'_n)`; when no component meets
//! `S(a, R_{n-1}/2)` at all, `R'_n = R_{n-1}/2`.  The annuli
//! `A_n = D(a, 4R_n) \ D̄(a, R_n/2)` are then pairwise disjoint, and no
//! retained component crosses from `S(a, R_{n-1}/2)` into radii below
//! `R'_n`.
//!
//! The smallest crossing radius is an infimum; it is realized by bisection
//! on the monotone predicate "some crossing component meets `S(a, r)`" to
//! relative tolerance 10⁻⁶, and cross-checked in tests against a linear
//! scan over 10⁴ candidate radii.

use super::component::Component;
use super::domain::PlanarDomain;
use super::Point;
use crate::error::{Error, Result};
use serde::Serialize;

/// Relative tolerance of the bisection for the smallest crossing radius.
pub const RADIUS_TOL: f64 = 1e-6;
/// Radii below this floor stop the chain (`truncated` is set).
pub const RADIUS_FLOOR: f64 = 1e-12;

/// Open annulus `inner < |z - a| < outer`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Annulus {
    pub inner: f64,
    pub outer: f64,
}

/// The chain of radii and annuli around `center`.
#[derive(Clone, Debug, Serialize)]
pub struct AnnulusChain {
    pub center: Point,
    pub base_radius: f64,
    /// Decreasing radii `R_1 > R_2 > …`.
    pub radii: Vec<f64>,
    /// True when the chain stopped at the radius floor rather than the
    /// requested length.
    pub truncated: bool,
}

impl AnnulusChain {
    /// The annuli `A_n = (R_n/2, 4R_n)`.
    pub fn annuli(&self) -> Vec<Annulus> {
        self.radii
            .iter()
            .map(|&r| Annulus { inner: r / 2.0, outer: 4.0 * r })
            .collect()
    }

    /// Assert pairwise disjointness of consecutive annuli: `4R_{n+1} < R_n/2`.
    pub fn annuli_disjoint(&self) -> bool {
        self.radii
            .windows(2)
            .all(|w| 4.0 * w[1] < w[0] / 2.0)
    }
}

/// Build the chain.  `excluded` names the component the chain wraps (its
/// crossings are ignored); `len` is the requested number of radii.
pub fn annulus_chain(
    dom: &PlanarDomain,
    a: Point,
    base_radius: f64,
    excluded: Option<&str>,
    len: usize,
) -> Result<AnnulusChain> {
    if !(base_radius > 0.0) || !base_radius.is_finite() {
        return Err(Error::invalid(format!(
            "chain base radius must be positive and finite, got {base_radius}"
        )));
    }
    let excluded_idx = match excluded {
        Some(id) => Some(
            dom.component_index(id)
                .ok_or_else(|| Error::invalid(format!("no component with id `{id}`")))?,
        ),
        None => None,
    };
    let retained: Vec<&Component> = dom
        .components()
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != excluded_idx)
        .map(|(_, c)| c)
        .collect();

    let mut radii = Vec::with_capacity(len);
    let mut truncated = false;
    let mut current = base_radius / 10.0;
    for n in 0..len {
        if current < RADIUS_FLOOR {
            truncated = true;
            break;
        }
        radii.push(current);
        if n + 1 == len {
            break;
        }
        let half = current / 2.0;
        let r_prime = smallest_crossing_radius(&retained, a, half);
        current = r_prime / 10.0;
    }
    let chain = AnnulusChain { center: a, base_radius, radii, truncated };
    debug_assert!(chain.annuli_disjoint());
    Ok(chain)
}

/// Smallest `r ≤ half` at which some component crossing `S(a, half)` still
/// meets `S(a, r)`; `half` itself when nothing crosses.  Bisection on the
/// monotone predicate, answer reported from the certified-true side.
pub fn smallest_crossing_radius(components: &[&Component], a: Point, half: f64) -> f64 {
    let crossing: Vec<&&Component> = components
        .iter()
        .filter(|c| c.meets_circle(a, half))
        .collect();
    if crossing.is_empty() {
        return half;
    }
    let hit = |r: f64| crossing.iter().any(|c| c.meets_circle(a, r));
    let (mut lo, mut hi) = (0.0_f64, half);
    // P(hi) holds by construction; drive the bracket to relative width
    // RADIUS_TOL, keeping hi on the true side.
    while hi - lo > RADIUS_TOL * hi && hi > f64::MIN_POSITIVE {
        let mid = 0.5 * (lo + hi);
        if hit(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Linear-scan oracle for [`smallest_crossing_radius`]: test `resolution`
/// evenly spaced radii and return the smallest hit (or `half`).
pub fn smallest_crossing_radius_scan(
    components: &[&Component],
    a: Point,
    half: f64,
    resolution: usize,
) -> f64 {
    let crossing: Vec<&&Component> = components
        .iter()
        .filter(|c| c.meets_circle(a, half))
        .collect();
    if crossing.is_empty() {
        return half;
    }
    for k in 1..=resolution {
        let r = half * (k as f64) / (resolution as f64);
        if crossing.iter().any(|c| c.meets_circle(a, r)) {
            return r;
        }
    }
    half
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::component::Shape;
    use approx::assert_relative_eq;

    fn domain(components: Vec<Component>) -> PlanarDomain {
        PlanarDomain::new(components, true).unwrap()
    }

    fn point_component(id: &str, x: f64, y: f64) -> Component {
        Component::new(id, Shape::Point { at: Point::new(x, y) }).unwrap()
    }

    #[test]
    fn empty_complement_gives_geometric_sequence() {
        let dom = domain(vec![point_component("center", 0.0, 0.0)]);
        let chain =
            annulus_chain(&dom, Point::new(0.0, 0.0), 1.0, Some("center"), 6).unwrap();
        assert_eq!(chain.radii.len(), 6);
        for (n, &r) in chain.radii.iter().enumerate() {
            // R_n = (R/10) · 20^{-n}: each step R'_{n+1} = R_n/2, R_{n+1} = R_n/20.
            assert_relative_eq!(r, 0.1 * 20.0_f64.powi(-(n as i32)), max_relative = 1e-12);
        }
        assert!(!chain.truncated);
        assert!(chain.annuli_disjoint());
    }

    #[test]
    fn far_component_does_not_disturb_chain() {
        let dom = domain(vec![
            point_component("center", 0.0, 0.0),
            Component::new("far", Shape::Disk { center: Point::new(50.0, 0.0), radius: 1.0 })
                .unwrap(),
        ]);
        let chain =
            annulus_chain(&dom, Point::new(0.0, 0.0), 1.0, Some("center"), 5).unwrap();
        for (n, &r) in chain.radii.iter().enumerate() {
            assert_relative_eq!(r, 0.1 * 20.0_f64.powi(-(n as i32)), max_relative = 1e-12);
        }
    }

    #[test]
    fn radial_segment_sets_second_radius() {
        // A thin radial segment spanning radii [R/40, R/15] crosses
        // S(a, R_1/2) = S(a, R/20), so R'_2 is its closest approach R/40
        // and R_2 = R/400.
        let r = 1.0_f64;
        let seg = Component::new(
            "seg",
            Shape::Polygon {
                vertices: vec![
                    Point::new(r / 40.0, 0.0),
                    Point::new(r / 15.0, 0.0),
                    Point::new(r / 15.0, 1e-9),
                ],
            },
        )
        .unwrap();
        let dom = domain(vec![point_component("center", 0.0, 0.0), seg]);
        let chain = annulus_chain(&dom, Point::new(0.0, 0.0), r, Some("center"), 2).unwrap();
        assert_relative_eq!(chain.radii[0], r / 10.0);
        assert_relative_eq!(chain.radii[1], r / 400.0, max_relative = 1e-5);

        // Brute-force scan over 10⁴ candidate radii agrees to scan spacing.
        let retained: Vec<&Component> = dom
            .components()
            .iter()
            .filter(|c| c.id() != "center")
            .collect();
        let half = chain.radii[0] / 2.0;
        let by_scan = smallest_crossing_radius_scan(&retained, Point::new(0.0, 0.0), half, 10_000);
        let by_bisection = smallest_crossing_radius(&retained, Point::new(0.0, 0.0), half);
        assert!((by_scan - by_bisection).abs() <= half / 10_000.0 * 2.0);
    }

    #[test]
    fn segment_short_of_half_circle_is_ignored() {
        // Spanning [R/40, R/25] stays inside S(a, R/20): it never meets
        // the half-radius circle, so the default rule R'_2 = R_1/2 applies.
        let r = 1.0_f64;
        let seg = Component::new(
            "seg",
            Shape::Polygon {
                vertices: vec![
                    Point::new(r / 40.0, 0.0),
                    Point::new(r / 25.0, 0.0),
                    Point::new(r / 25.0, 1e-9),
                ],
            },
        )
        .unwrap();
        let dom = domain(vec![point_component("center", 0.0, 0.0), seg]);
        let chain = annulus_chain(&dom, Point::new(0.0, 0.0), r, Some("center"), 2).unwrap();
        assert_relative_eq!(chain.radii[1], r / 200.0, max_relative = 1e-12);
    }

    #[test]
    fn annuli_pairwise_disjoint_on_random_domains() {
        use rand::Rng;
        let mut rng = crate::rng::rng(07_03);
        for _ in 0..25 {
            let mut comps = vec![point_component("center", 0.0, 0.0)];
            for k in 0..6 {
                let d = 10.0_f64.powf(-rng.gen_range(0.0..6.0));
                let theta = rng.gen_range(0.0..std::f64::consts::TAU);
                comps.push(
                    Component::new(
                        format!("c{k}"),
                        Shape::Disk { center: Point::polar(2.0 * d, theta), radius: d / 2.0 },
                    )
                    .unwrap(),
                );
            }
            let Ok(dom) = PlanarDomain::new(comps, true) else {
                continue; // random disks may collide; skip those draws
            };
            let chain =
                annulus_chain(&dom, Point::new(0.0, 0.0), 1.0, Some("center"), 8).unwrap();
            assert!(chain.annuli_disjoint());
            // Stronger: all pairs, not only consecutive ones.
            let ann = chain.annuli();
            for i in 0..ann.len() {
                for j in (i + 1)..ann.len() {
                    assert!(ann[j].outer < ann[i].inner);
                }
            }
        }
    }

    #[test]
    fn floor_truncates_chain() {
        let dom = domain(vec![point_component("center", 0.0, 0.0)]);
        let chain =
            annulus_chain(&dom, Point::new(0.0, 0.0), 1.0, Some("center"), 100).unwrap();
        assert!(chain.truncated);
        assert!(chain.radii.len() < 100);
        assert!(*chain.radii.last().unwrap() >= RADIUS_FLOOR);
    }

    #[test]
    fn bad_inputs_rejected() {
        let dom = domain(vec![point_component("center", 0.0, 0.0)]);
        assert!(annulus_chain(&dom, Point::new(0.0, 0.0), 0.0, Some("center"), 3).is_err());
        assert!(annulus_chain(&dom, Point::new(0.0, 0.0), 1.0, Some("nope"), 3).is_err());
    }
}
