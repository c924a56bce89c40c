//! Constructive annulus probes, explicit density recipes, and
//! circle-family floors.
//!
//! The probe solves the modulus of the family of walks connecting the two
//! boundary circles of a ratio-8 annulus around a point; its free-plane
//! value is `2π/log 8 ≈ 3.0215`.  The density recipes build concrete
//! admissible or indicator densities whose energies carry the counting
//! estimates of the uniformization argument, and every recipe verifies
//! its own cardinality, containment, and energy bounds, failing loudly
//! when the supplied geometry breaks one of them.  The circle-family
//! floor combines a geometric conformance check with a solved concentric
//! circle family and certifies its dual lower bound against the
//! universal `10⁻⁴` threshold.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::domain::PlanarDomain;
use crate::geom::{BBox, Point};
use crate::grid::{build_graph, DensityAssignment, Vertex};

use super::{
    circle_rows, row_payoff, transboundary_modulus, ModulusResult, PathFamilySpec,
};

/// Universal floor for certified circle-family lower bounds: any
/// admissible density for the circles of a ratio-8 annulus satisfying
/// the conformance conditions has energy at least
/// `(log 8 / ((2π·log 8)^{1/2} + 100))² ≈ 4.03·10⁻⁴ > 10⁻⁴`.
pub const CIRCLE_FAMILY_FLOOR: f64 = 1e-4;

/// Modulus of the family of walks connecting the outer and the inner
/// boundary circle of the annulus `A(center; r_in, r_out)`.
///
/// The grid window is the square of half-width `r_out + 2h` around
/// `center`; the terminal sets are the open cells at distance at least
/// `r_out` (outer) and at most `r_in` (inner) from the center.  Every
/// crossing of the annulus extends to such a walk and vice versa, so the
/// discrete family value converges to the continuum annulus modulus.
/// With `excluded`, that component's node is removed from every walk, so
/// the family only keeps crossings that avoid the component.
pub fn annulus_family_modulus(
    dom: &PlanarDomain,
    center: Point,
    r_in: f64,
    r_out: f64,
    h: f64,
    tol: f64,
    excluded: Option<&str>,
) -> Result<ModulusResult> {
    if !(r_in.is_finite() && r_out.is_finite() && 0.0 < r_in && r_in < r_out) {
        return Err(Error::invalid("annulus radii must satisfy 0 < r_in < r_out"));
    }
    let half = r_out + 2.0 * h;
    let window = BBox {
        lo: Point::new(center.x - half, center.y - half),
        hi: Point::new(center.x + half, center.y + half),
    };
    let g = build_graph(dom, window, h)?;
    let mut from = Vec::new();
    let mut to = Vec::new();
    for c in g.open_cells() {
        let d = g.cell_center(c).dist(center);
        if d >= r_out {
            from.push(Vertex::Cell(c));
        } else if d <= r_in {
            to.push(Vertex::Cell(c));
        }
    }
    if from.is_empty() || to.is_empty() {
        return Err(Error::degenerate(
            "annulus terminal rings contain no open cells at this resolution",
        ));
    }
    let forbidden = match excluded {
        None => Vec::new(),
        Some(id) => {
            let n = g.node_index(id).ok_or_else(|| {
                Error::invalid(format!("excluded component `{id}` has no node in the window"))
            })?;
            vec![n]
        }
    };
    let fam = PathFamilySpec::connect(from, to).with_forbidden(forbidden);
    transboundary_modulus(&g, &fam, tol)
}

/// The ratio-8 annulus probe around `a`: the modulus of the walks
/// connecting `S(a, 4r)` to `S(a, r/2)`, optionally forbidding one
/// component's node.  Free-plane value `2π/log 8 ≈ 3.0215`.
pub fn main_estimate_probe(
    dom: &PlanarDomain,
    a: Point,
    r: f64,
    excluded: Option<&str>,
    h: f64,
    tol: f64,
) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid("probe radius must be positive"));
    }
    Ok(annulus_family_modulus(dom, a, 0.5 * r, 4.0 * r, h, tol, excluded)?.value)
}

/// A group of "good" components charged by one anchor disk.
#[derive(Debug, Clone)]
pub struct GoodGroup {
    pub anchor: Point,
    pub r: f64,
    /// Ids of the components charged through this group.
    pub ids: Vec<String>,
}

/// An explicitly constructed density whose energy carries one of the
/// counting estimates.
#[derive(Debug, Clone)]
pub enum Recipe {
    /// Node density 1 on every component of diameter at least `tau·r`
    /// meeting the annulus `A(center; r/2, 4r)` (other than `excluded`),
    /// zero elsewhere.  The energy is the number of such components,
    /// verified against the packing bound `10·n_packing/tau²`.
    IndicatorLarge {
        center: Point,
        r: f64,
        tau: f64,
        n_packing: f64,
        excluded: Option<String>,
    },
    /// Cell density `1/scale` on the open cells of `D(center, 3·scale)`
    /// and node density `8·diam/(tau·scale)` on the listed components.
    /// Verifies per group: the diameter window
    /// `tau·r ≤ diam ≤ r/tau`, the cardinality bound `10·n_packing/tau⁸`,
    /// and the group energy bound `640·n_packing·(r/scale)²/tau¹²`;
    /// across groups: the anchor disks `D(anchor, tau·r)` are pairwise
    /// disjoint inside `D(center, 5·scale)`, the scaled area bound
    /// `tau²·Σ(r/scale)² ≤ 25`, and the total node energy bound
    /// `16000·n_packing/tau¹⁴`.  The cell part is verified against the
    /// area bound `9π`.
    GoodDiameter {
        center: Point,
        scale: f64,
        tau: f64,
        n_packing: f64,
        groups: Vec<GoodGroup>,
    },
    /// Admissible density for the concentric circles of the annulus
    /// `A(center; r/2, 4r)`: cell density `1.1/(2π·d)` on the band (the
    /// 10% is quadrature headroom) and node density
    /// `min(1, diam/(2·t))`, `t = max(dist to center, r/2 + h)`, on
    /// components meeting the band.  Verifies that every circle row of
    /// the discretized family pays at least 1.
    CircleSection { center: Point, r: f64 },
}

/// Energy of an explicit density, split into its grid-cell and
/// component-node parts (both in the recipe's normalized units).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyBreakdown {
    pub cell_part: f64,
    pub node_part: f64,
    pub total: f64,
    /// Number of component nodes carrying a positive density.
    pub charged_nodes: usize,
}

/// Builds the recipe's density on a grid over `window` with mesh `h` and
/// returns its energy, verifying every bound the recipe declares.
pub fn explicit_density_energy(
    dom: &PlanarDomain,
    window: BBox,
    h: f64,
    recipe: &Recipe,
) -> Result<EnergyBreakdown> {
    match recipe {
        Recipe::IndicatorLarge { center, r, tau, n_packing, excluded } => {
            indicator_energy(dom, *center, *r, *tau, *n_packing, excluded.as_deref())
        }
        Recipe::GoodDiameter { center, scale, tau, n_packing, groups } => {
            good_diameter_energy(dom, window, h, *center, *scale, *tau, *n_packing, groups)
        }
        Recipe::CircleSection { center, r } => circle_section_energy(dom, window, h, *center, *r),
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau.is_finite() && 0.0 < tau && tau < 1.0) {
        return Err(Error::invalid("diameter threshold τ must lie in (0, 1)"));
    }
    Ok(())
}

fn check_packing(n: f64) -> Result<()> {
    if !(n.is_finite() && n >= 1.0) {
        return Err(Error::invalid("packing constant must be finite and at least 1"));
    }
    Ok(())
}

/// Whether a connected component with distance range `(lo, hi)` from the
/// annulus center meets the open annulus `A(center; r_in, r_out)`.
/// Connectivity makes the attained distances exactly the interval
/// `[lo, hi]`, so meeting is equivalent to interval overlap.
fn meets_annulus(lo: f64, hi: f64, r_in: f64, r_out: f64) -> bool {
    lo < r_out && hi > r_in
}

fn indicator_energy(
    dom: &PlanarDomain,
    center: Point,
    r: f64,
    tau: f64,
    n_packing: f64,
    excluded: Option<&str>,
) -> Result<EnergyBreakdown> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid("annulus scale must be positive"));
    }
    check_tau(tau)?;
    check_packing(n_packing)?;
    if let Some(id) = excluded {
        if dom.component(id).is_none() {
            return Err(Error::invalid(format!("excluded component `{id}` not found")));
        }
    }
    let mut count = 0usize;
    for comp in dom.components() {
        if excluded == Some(comp.id()) {
            continue;
        }
        let (lo, hi) = comp.range_from(center);
        if meets_annulus(lo, hi, 0.5 * r, 4.0 * r) && comp.diameter() >= tau * r {
            count += 1;
        }
    }
    let bound = 10.0 * n_packing / (tau * tau);
    if count as f64 > bound {
        return Err(Error::degenerate(format!(
            "{count} components of diameter ≥ {:.6} meet the annulus, exceeding the packing \
             bound {bound:.3}",
            tau * r
        )));
    }
    Ok(EnergyBreakdown {
        cell_part: 0.0,
        node_part: count as f64,
        total: count as f64,
        charged_nodes: count,
    })
}

#[allow(clippy::too_many_arguments)]
fn good_diameter_energy(
    dom: &PlanarDomain,
    window: BBox,
    h: f64,
    center: Point,
    scale: f64,
    tau: f64,
    n_packing: f64,
    groups: &[GoodGroup],
) -> Result<EnergyBreakdown> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::invalid("recipe scale must be positive"));
    }
    check_tau(tau)?;
    check_packing(n_packing)?;

    let mut node_part = 0.0;
    let mut charged = 0usize;
    let mut seen: std::collections::HashSet<&str> = std::collections::HashSet::new();
    let mut r_hat_sq_sum = 0.0;
    for group in groups {
        if !(group.r.is_finite() && group.r > 0.0) {
            return Err(Error::invalid("group radius must be positive"));
        }
        let r_hat = group.r / scale;
        let mut group_energy = 0.0;
        for id in &group.ids {
            let comp = dom
                .component(id)
                .ok_or_else(|| Error::invalid(format!("component `{id}` not found")))?;
            if !seen.insert(comp.id()) {
                return Err(Error::invalid(format!("component `{id}` listed in two groups")));
            }
            let d_hat = comp.diameter() / scale;
            if !(tau * r_hat <= d_hat && d_hat <= r_hat / tau) {
                return Err(Error::degenerate(format!(
                    "component `{id}` has scaled diameter {d_hat:.6} outside the admissible \
                     window [{:.6}, {:.6}]",
                    tau * r_hat,
                    r_hat / tau
                )));
            }
            let rho = 8.0 * d_hat / tau;
            group_energy += rho * rho;
            charged += 1;
        }
        let card_bound = 10.0 * n_packing / tau.powi(8);
        if group.ids.len() as f64 > card_bound {
            return Err(Error::degenerate(format!(
                "group holds {} components, exceeding the cardinality bound {card_bound:.3}",
                group.ids.len()
            )));
        }
        let energy_bound = 640.0 * n_packing * r_hat * r_hat / tau.powi(12);
        if group_energy > energy_bound * (1.0 + 1e-12) {
            return Err(Error::degenerate(format!(
                "group node energy {group_energy:.6} exceeds its bound {energy_bound:.6}"
            )));
        }
        node_part += group_energy;
        r_hat_sq_sum += r_hat * r_hat;
    }
    for (i, gi) in groups.iter().enumerate() {
        if gi.anchor.dist(center) + tau * gi.r > 5.0 * scale * (1.0 + 1e-12) {
            return Err(Error::degenerate(
                "a group anchor disk leaves the disk of radius five scales",
            ));
        }
        for gj in groups.iter().skip(i + 1) {
            if gi.anchor.dist(gj.anchor) < tau * (gi.r + gj.r) {
                return Err(Error::degenerate("two group anchor disks overlap"));
            }
        }
    }
    if tau * tau * r_hat_sq_sum > 25.0 * (1.0 + 1e-12) {
        return Err(Error::degenerate(
            "group radii violate the disjoint-disk area bound 25/τ²",
        ));
    }
    let node_bound = 16000.0 * n_packing / tau.powi(14);
    if node_part > node_bound * (1.0 + 1e-12) {
        return Err(Error::degenerate(format!(
            "total node energy {node_part:.6} exceeds the bound {node_bound:.6}"
        )));
    }

    // Cell part: density 1/scale on the open cells whose square lies in
    // D(center, 3·scale); their total area is below π·(3·scale)², so the
    // scaled energy stays below 9π.
    let g = build_graph(dom, window, h)?;
    let reach = 3.0 * scale - h;
    let mut cells = 0usize;
    for c in g.open_cells() {
        if g.cell_center(c).dist(center) <= reach {
            cells += 1;
        }
    }
    let cell_part = (h / scale) * (h / scale) * cells as f64;
    if cell_part > 9.0 * PI {
        return Err(Error::degenerate(format!(
            "cell energy {cell_part:.6} exceeds the area bound 9π"
        )));
    }
    Ok(EnergyBreakdown {
        cell_part,
        node_part,
        total: cell_part + node_part,
        charged_nodes: charged,
    })
}

fn circle_section_energy(
    dom: &PlanarDomain,
    window: BBox,
    h: f64,
    center: Point,
    r: f64,
) -> Result<EnergyBreakdown> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid("annulus scale must be positive"));
    }
    let r_min = 0.5 * r + h;
    let r_max = 4.0 * r - h;
    if r_min >= r_max {
        return Err(Error::invalid("mesh too coarse for the circle band"));
    }
    let g = build_graph(dom, window, h)?;
    let mut rho = DensityAssignment::zeros(&g);
    for c in g.open_cells() {
        let d = g.cell_center(c).dist(center);
        if d >= 0.5 * r - h && d <= 4.0 * r + h {
            rho.cell[c] = 1.1 / (2.0 * PI * d);
        }
    }
    let mut charged = 0usize;
    for n in 0..g.node_count() {
        let comp = dom.component(g.node_id(n)).ok_or_else(|| {
            Error::construction("graph node without a matching domain component")
        })?;
        let (lo, hi) = comp.range_from(center);
        if meets_annulus(lo, hi, 0.5 * r, 4.0 * r) {
            let t = lo.max(r_min);
            rho.node[n] = (comp.diameter() / (2.0 * t)).min(1.0);
            charged += 1;
        }
    }
    // The density must be admissible: every discretized circle of the
    // band pays at least 1.
    let rows = circle_rows(&g, center, r_min, r_max)?;
    let mut min_payoff = f64::INFINITY;
    for row in &rows {
        min_payoff = min_payoff.min(row_payoff(row, &rho));
    }
    if min_payoff < 1.0 {
        return Err(Error::degenerate(format!(
            "a circle row pays {min_payoff:.6} < 1 under the section density"
        )));
    }
    let cell_part: f64 =
        g.open_cells().map(|c| rho.cell[c] * rho.cell[c]).sum::<f64>() * h * h;
    let node_part: f64 = rho.node.iter().map(|v| v * v).sum();
    Ok(EnergyBreakdown {
        cell_part,
        node_part,
        total: cell_part + node_part,
        charged_nodes: charged,
    })
}

/// Closed-form modulus floor `(δ/(√π + 2))²` for a family of parallel
/// crossings of total width `δ` inside the unit disk: integrating the
/// admissibility of each crossing gives
/// `δ ≤ ∫ρ dA + Σ diam(q)·ρ(q)`, and Cauchy–Schwarz bounds the two terms
/// by `√π·E^{1/2}` (area of the unit disk) and `2·E^{1/2}` (disjoint
/// components have `Σ diam² ≤ 4·Area/π ≤ 4`).
pub fn circle_lower_bounds(delta: f64) -> Result<f64> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::invalid("separation δ must be finite and nonnegative"));
    }
    let c = delta / (PI.sqrt() + 2.0);
    Ok(c * c)
}

/// Certifies the circle-family floor at scale `r_n`: checks the
/// conformance conditions (at most 100 components of diameter at least
/// `r_n` meet the annulus `A(center; r_n/2, 4r_n)`, and every smaller
/// component meeting it stays inside `D(center, 5r_n)`), solves the
/// concentric circle family on the radii `(r_n/2 + h, 4r_n − h)`, and
/// verifies that its certified dual lower bound clears `10⁻⁴`.
pub fn circle_family_floor(
    dom: &PlanarDomain,
    center: Point,
    r_n: f64,
    h: f64,
    tol: f64,
) -> Result<ModulusResult> {
    if !(r_n.is_finite() && r_n > 0.0) {
        return Err(Error::invalid("annulus scale must be positive"));
    }
    let mut large = 0usize;
    for comp in dom.components() {
        let (lo, hi) = comp.range_from(center);
        if !meets_annulus(lo, hi, 0.5 * r_n, 4.0 * r_n) {
            continue;
        }
        if comp.diameter() >= r_n {
            large += 1;
        } else if hi > 5.0 * r_n {
            return Err(Error::degenerate(format!(
                "small component `{}` escapes the disk of radius 5·r",
                comp.id()
            )));
        }
    }
    if large > 100 {
        return Err(Error::degenerate(format!(
            "{large} components of diameter ≥ r meet the annulus; at most 100 are allowed"
        )));
    }
    let half = 4.0 * r_n + 2.0 * h;
    let window = BBox {
        lo: Point::new(center.x - half, center.y - half),
        hi: Point::new(center.x + half, center.y + half),
    };
    let g = build_graph(dom, window, h)?;
    let fam = PathFamilySpec::circles(center, 0.5 * r_n + h, 4.0 * r_n - h);
    let res = transboundary_modulus(&g, &fam, tol)?;
    if res.lower_bound < CIRCLE_FAMILY_FLOOR {
        return Err(Error::degenerate(format!(
            "certified circle-family lower bound {:.6e} fell below the 10⁻⁴ floor",
            res.lower_bound
        )));
    }
    Ok(res)
}
