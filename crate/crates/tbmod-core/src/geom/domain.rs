//! Planar domains given by their complementary components.
//!
//! A domain is the complement (in the plane or the sphere) of a finite
//! union of pairwise disjoint compact connected sets.  The JSON schema is
//!
//! ```json
//! {
//!   "components": [
//!     {"id": "a", "shape": "disk", "center": [0.0, 0.0], "radius": 1.0},
//!     {"id": "b", "shape": "point", "at": [3.0, 0.0]},
//!     {"id": "c", "shape": "polygon", "vertices": [[5,0],[6,0],[6,1]]},
//!     {"id": "t", "shape": "tripod",
//!      "arms": [[[0,0],[1,0]],[[0,0],[-1,1]],[[0,0],[-1,-1]]],
//!      "thickness": 0.0}
//!   ],
//!   "contains_infinity": true
//! }
//! ```
//!
//! `validate` checks ids, shape sanity and pairwise disjointness, and
//! reports the minimal separation between component pairs.

use super::component::{Component, Shape};
use super::{BBox, Point};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ComponentSpec {
    id: String,
    #[serde(flatten)]
    shape: Shape,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct DomainSpec {
    components: Vec<ComponentSpec>,
    #[serde(default = "default_true")]
    contains_infinity: bool,
}

fn default_true() -> bool {
    true
}

/// A planar domain: complement of finitely many disjoint compact components.
#[derive(Clone, Debug)]
pub struct PlanarDomain {
    components: Vec<Component>,
    contains_infinity: bool,
}

/// Validation summary produced by [`PlanarDomain::validate`].
#[derive(Clone, Debug, Serialize)]
pub struct DomainReport {
    pub component_count: usize,
    /// Minimal set distance over all unordered pairs (`None` when < 2).
    pub min_separation: Option<f64>,
    /// Closest pair of component ids.
    pub closest_pair: Option<(String, String)>,
    pub max_diameter: f64,
    pub bbox: Option<(Point, Point)>,
}

impl PlanarDomain {
    pub fn new(components: Vec<Component>, contains_infinity: bool) -> Result<Self> {
        let d = PlanarDomain { components, contains_infinity };
        d.validate()?;
        Ok(d)
    }

    /// Parse from JSON, mapping schema errors to input errors with the
    /// serde location preserved in the message.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: DomainSpec = serde_json::from_str(text)?;
        let mut components = Vec::with_capacity(spec.components.len());
        for c in spec.components {
            components.push(Component::new(c.id, c.shape)?);
        }
        PlanarDomain::new(components, spec.contains_infinity)
    }

    pub fn to_json(&self) -> String {
        let spec = DomainSpec {
            components: self
                .components
                .iter()
                .map(|c| ComponentSpec { id: c.id().to_string(), shape: c.shape().clone() })
                .collect(),
            contains_infinity: self.contains_infinity,
        };
        serde_json::to_string_pretty(&spec).expect("domain serializes")
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn contains_infinity(&self) -> bool {
        self.contains_infinity
    }

    pub fn component(&self, id: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.id() == id)
    }

    pub fn component_index(&self, id: &str) -> Option<usize> {
        self.components.iter().position(|c| c.id() == id)
    }

    /// Distance from a point to the union of all components.
    pub fn dist_to_components(&self, p: Point) -> f64 {
        self.components
            .iter()
            .map(|c| c.dist_to_point(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether `p` lies in the open domain (outside every component).
    pub fn contains(&self, p: Point) -> bool {
        self.components.iter().all(|c| c.dist_to_point(p) > 0.0)
    }

    /// Check ids, disjointness; produce the separation report.
    pub fn validate(&self) -> Result<DomainReport> {
        for (i, a) in self.components.iter().enumerate() {
            for b in &self.components[i + 1..] {
                if a.id() == b.id() {
                    return Err(Error::invalid(format!("duplicate component id `{}`", a.id())));
                }
            }
        }
        let mut min_sep = f64::INFINITY;
        let mut pair = None;
        for (i, a) in self.components.iter().enumerate() {
            for b in &self.components[i + 1..] {
                // Bounding-box pruning: only refine pairs that could be
                // closer than the current minimum.
                if a.bbox().gap(&b.bbox()) >= min_sep {
                    continue;
                }
                let d = a.dist_to(b);
                if d <= 0.0 {
                    return Err(Error::invalid(format!(
                        "components `{}` and `{}` are not disjoint",
                        a.id(),
                        b.id()
                    )));
                }
                if d < min_sep {
                    min_sep = d;
                    pair = Some((a.id().to_string(), b.id().to_string()));
                }
            }
        }
        let bbox = if self.components.is_empty() {
            None
        } else {
            let mut bb = BBox::empty();
            for c in &self.components {
                bb = bb.union(&c.bbox());
            }
            Some((bb.lo, bb.hi))
        };
        Ok(DomainReport {
            component_count: self.components.len(),
            min_separation: pair.as_ref().map(|_| min_sep),
            closest_pair: pair,
            max_diameter: self
                .components
                .iter()
                .map(|c| c.diameter())
                .fold(0.0_f64, f64::max),
            bbox,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const THREE_DISKS: &str = r#"{
        "components": [
            {"id": "a", "shape": "disk", "center": [0.0, 0.0], "radius": 1.0},
            {"id": "b", "shape": "disk", "center": [3.0, 0.0], "radius": 1.0},
            {"id": "c", "shape": "point", "at": [0.0, 5.0]}
        ],
        "contains_infinity": true
    }"#;

    #[test]
    fn parse_and_report() {
        let d = PlanarDomain::from_json(THREE_DISKS).unwrap();
        assert_eq!(d.components().len(), 3);
        let report = d.validate().unwrap();
        assert_eq!(report.component_count, 3);
        assert_relative_eq!(report.min_separation.unwrap(), 1.0);
        assert_eq!(
            report.closest_pair,
            Some(("a".to_string(), "b".to_string()))
        );
        assert_relative_eq!(report.max_diameter, 2.0);
    }

    #[test]
    fn overlapping_components_rejected() {
        let text = r#"{
            "components": [
                {"id": "a", "shape": "disk", "center": [0.0, 0.0], "radius": 1.0},
                {"id": "b", "shape": "disk", "center": [1.5, 0.0], "radius": 1.0}
            ]
        }"#;
        let err = PlanarDomain::from_json(text).unwrap_err();
        assert!(err.to_string().contains("not disjoint"), "{err}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = r#"{
            "components": [
                {"id": "a", "shape": "point", "at": [0.0, 0.0]},
                {"id": "a", "shape": "point", "at": [1.0, 0.0]}
            ]
        }"#;
        let err = PlanarDomain::from_json(text).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn json_round_trip() {
        let d = PlanarDomain::from_json(THREE_DISKS).unwrap();
        let again = PlanarDomain::from_json(&d.to_json()).unwrap();
        assert_eq!(again.components().len(), 3);
        assert_eq!(again.components()[0].id(), "a");
    }

    #[test]
    fn membership() {
        let d = PlanarDomain::from_json(THREE_DISKS).unwrap();
        assert!(!d.contains(Point::new(0.0, 0.0)));
        assert!(d.contains(Point::new(1.5, 0.0)));
        assert_relative_eq!(d.dist_to_components(Point::new(1.5, 0.0)), 0.5);
    }

    #[test]
    fn malformed_json_is_input_error() {
        let err = PlanarDomain::from_json("{\"components\": [{\"id\": 3}]}").unwrap_err();
        assert!(matches!(err, Error::Json(_)));
    }
}
