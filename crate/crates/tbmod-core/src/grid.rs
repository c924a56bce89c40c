//! Grid quotient of a planar domain: open cells plus component super-nodes.
//!
//! A rectangular window is covered by square cells of side `h`.  A cell is
//! *blocked* when its center comes within `h/2` of a complementary
//! component; the remaining cells are *open* and carry measure `h²`.  Every
//! component meeting the window collapses to a single super-node, and every
//! open cell within `3h/2` of the component is *attached* to that node —
//! the attached cells form the node's discrete boundary (a 4-neighbor of a
//! blocked cell is always within `h + h/2` of the blocker, hence attached).
//!
//! Walks alternate runs of stepwise-adjacent open cells with node visits.
//! Cell steps use the 16-neighborhood — axis (length `h`), diagonal
//! (`√2·h`), and knight (`√5·h`) moves — so the step metric exceeds
//! Euclidean length by at most 2.75% in any direction, keeping discrete
//! admissibility conservative without the severe anisotropy of a
//! 4-connected grid (whose L1 paths gain radius at angle `θ` for only
//! `dr/max(|cos θ|, |sin θ|)`, deflating an annulus modulus by 18%).
//! Diagonal and knight steps require an open corner/intermediate cell, so
//! a walk can never slip across a component without paying its node.
//!
//! The payoff of a walk under a density `ρ` is the trapezoid quadrature of
//! `∫ ρ ds` along the polyline of cell centers — each step of length `ℓ`
//! contributes `ℓ·(ρ(u)+ρ(v))/2`, and each maximal cell run adds half-cell
//! caps `(h/2)·ρ(end)` at both ends — plus `Σ ρ(node)` over the distinct
//! visited nodes.  A straight run of `k` cells therefore pays exactly
//! `k·h·ρ`, and a closed 4-connected loop pays exactly its cell sum.  The
//! node sum is over *distinct* nodes; `shortest_walk` charges per visit,
//! but its outputs never revisit a node (weights are nonnegative), so the
//! two conventions agree on extremal walks.
//!
//! `shortest_walk` is a deterministic Dijkstra on the cell+node graph with
//! the same quadrature and lexicographic tie-breaking; it is the
//! separation oracle used by the modulus solver.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::domain::PlanarDomain;
use crate::geom::{BBox, Point};

/// Blocking reach in units of `h`: a cell is blocked when its center is
/// within `h/2` of a component.
pub const BLOCK_FACTOR: f64 = 0.5;
/// Attachment reach in units of `h`: an open cell within `3h/2` of a
/// component is attached to its node.
pub const ATTACH_FACTOR: f64 = 1.5;
/// Hard cap on the cell count so a bad window/step pair fails fast.
pub const MAX_CELLS: usize = 20_000_000;

/// Cell step offsets with lengths in units of `h`: axis, diagonal, knight.
/// Knight and diagonal entries carry the intermediate cells at least one of
/// which must be open for the step to be legal.
const STEP_OFFSETS: [((isize, isize), f64, Option<[(isize, isize); 2]>); 16] = {
    const SQRT2: f64 = std::f64::consts::SQRT_2;
    const SQRT5: f64 = 2.236_067_977_499_789_7;
    [
        ((1, 0), 1.0, None),
        ((-1, 0), 1.0, None),
        ((0, 1), 1.0, None),
        ((0, -1), 1.0, None),
        ((1, 1), SQRT2, Some([(1, 0), (0, 1)])),
        ((1, -1), SQRT2, Some([(1, 0), (0, -1)])),
        ((-1, 1), SQRT2, Some([(-1, 0), (0, 1)])),
        ((-1, -1), SQRT2, Some([(-1, 0), (0, -1)])),
        ((2, 1), SQRT5, Some([(1, 0), (1, 1)])),
        ((2, -1), SQRT5, Some([(1, 0), (1, -1)])),
        ((-2, 1), SQRT5, Some([(-1, 0), (-1, 1)])),
        ((-2, -1), SQRT5, Some([(-1, 0), (-1, -1)])),
        ((1, 2), SQRT5, Some([(0, 1), (1, 1)])),
        ((-1, 2), SQRT5, Some([(0, 1), (-1, 1)])),
        ((1, -2), SQRT5, Some([(0, -1), (1, -1)])),
        ((-1, -2), SQRT5, Some([(0, -1), (-1, -1)])),
    ]
};

/// A vertex of the quotient graph: an open grid cell or a component node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Vertex {
    /// Linear cell index (`j * nx + i`).
    Cell(usize),
    /// Component-node index.
    Node(usize),
}

/// A walk through the quotient graph: alternating runs of adjacent open
/// cells and component-node visits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteWalk {
    pub steps: Vec<Vertex>,
    /// Whether the first/last step were drawn from the caller's terminal
    /// sets (set by `shortest_walk`; defaults to untagged).
    #[serde(default)]
    pub terminal_tags: (bool, bool),
}

impl DiscreteWalk {
    pub fn new(steps: Vec<Vertex>) -> Self {
        DiscreteWalk { steps, terminal_tags: (false, false) }
    }

    /// Cell steps in walk order (with multiplicity).
    pub fn cell_steps(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().filter_map(|s| match *s {
            Vertex::Cell(i) => Some(i),
            Vertex::Node(_) => None,
        })
    }

    /// Distinct visited node indices, ascending.
    pub fn distinct_nodes(&self) -> Vec<usize> {
        let mut nodes: Vec<usize> = self
            .steps
            .iter()
            .filter_map(|s| match *s {
                Vertex::Node(n) => Some(n),
                Vertex::Cell(_) => None,
            })
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Nonnegative density on the quotient graph: one value per cell (unit
/// 1/length; entries at blocked cells are ignored) and one per node
/// (dimensionless).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityAssignment {
    pub cell: Vec<f64>,
    pub node: Vec<f64>,
}

impl DensityAssignment {
    pub fn zeros(g: &TransboundaryGraph) -> Self {
        DensityAssignment { cell: vec![0.0; g.cell_count()], node: vec![0.0; g.node_count()] }
    }

    pub fn uniform(g: &TransboundaryGraph, value: f64) -> Self {
        DensityAssignment {
            cell: vec![value; g.cell_count()],
            node: vec![value; g.node_count()],
        }
    }

    pub fn validate(&self, g: &TransboundaryGraph) -> Result<()> {
        if self.cell.len() != g.cell_count() || self.node.len() != g.node_count() {
            return Err(Error::invalid(format!(
                "density sized {}×{} does not match graph with {} cells and {} nodes",
                self.cell.len(),
                self.node.len(),
                g.cell_count(),
                g.node_count()
            )));
        }
        let bad = |v: f64| !v.is_finite() || v < 0.0;
        if self.cell.iter().copied().any(bad) || self.node.iter().copied().any(bad) {
            return Err(Error::invalid("density values must be finite and nonnegative"));
        }
        Ok(())
    }

    /// The quadratic energy `h²·Σ_open ρ(cell)² + Σ ρ(node)²`.
    pub fn energy(&self, g: &TransboundaryGraph) -> f64 {
        let cell_part: f64 =
            g.open_cells().map(|i| self.cell[i] * self.cell[i]).sum::<f64>() * g.h() * g.h();
        let node_part: f64 = self.node.iter().map(|v| v * v).sum();
        cell_part + node_part
    }
}

/// Summary counters for reporting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphStats {
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub open_cells: usize,
    pub blocked_cells: usize,
    pub component_nodes: usize,
    pub attached_cells_total: usize,
}

/// Immutable discrete quotient of a planar domain over a window.
#[derive(Debug, Clone)]
pub struct TransboundaryGraph {
    window: BBox,
    h: f64,
    nx: usize,
    ny: usize,
    open: Vec<bool>,
    /// Node index blocking each cell (`u32::MAX` when open / unattributed).
    blocked_by: Vec<u32>,
    node_ids: Vec<String>,
    /// Attached open cells per node, ascending.
    node_cells: Vec<Vec<usize>>,
    /// Node indices attached to each open cell, ascending.
    attach_map: HashMap<usize, Vec<usize>>,
}

impl TransboundaryGraph {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn window(&self) -> BBox {
        self.window
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_open(&self, idx: usize) -> bool {
        self.open[idx]
    }

    pub fn open_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.cell_count()).filter(move |&i| self.open[i])
    }

    pub fn open_cell_count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell_center(&self, idx: usize) -> Point {
        let (i, j) = self.coords(idx);
        Point::new(
            self.window.lo.x + (i as f64 + 0.5) * self.h,
            self.window.lo.y + (j as f64 + 0.5) * self.h,
        )
    }

    /// Cell containing a point, if inside the covered rectangle.
    pub fn cell_at(&self, p: Point) -> Option<usize> {
        let fx = (p.x - self.window.lo.x) / self.h;
        let fy = (p.y - self.window.lo.y) / self.h;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        if i >= self.nx || j >= self.ny {
            return None;
        }
        Some(self.index(i, j))
    }

    pub fn node_id(&self, n: usize) -> &str {
        &self.node_ids[n]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|s| s == id)
    }

    pub fn attached_cells(&self, n: usize) -> &[usize] {
        &self.node_cells[n]
    }

    pub fn nodes_of_cell(&self, idx: usize) -> &[usize] {
        self.attach_map.get(&idx).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Node whose component blocks the cell, if any.
    pub fn blocking_node(&self, idx: usize) -> Option<usize> {
        let b = self.blocked_by[idx];
        (b != u32::MAX).then(|| b as usize)
    }

    /// Open 4-neighbors of a cell.
    pub fn cell_neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.coords(idx);
        let (nx, ny) = (self.nx, self.ny);
        [
            (i > 0).then(|| idx - 1),
            (i + 1 < nx).then(|| idx + 1),
            (j > 0).then(|| idx - nx),
            (j + 1 < ny).then(|| idx + nx),
        ]
        .into_iter()
        .flatten()
        .filter(move |&c| self.open[c])
    }

    pub fn cells_adjacent(&self, a: usize, b: usize) -> bool {
        let (ia, ja) = self.coords(a);
        let (ib, jb) = self.coords(b);
        ia.abs_diff(ib) + ja.abs_diff(jb) == 1
    }

    fn offset_cell(&self, i: usize, j: usize, di: isize, dj: isize) -> Option<usize> {
        let ni = i as isize + di;
        let nj = j as isize + dj;
        if ni < 0 || nj < 0 || ni as usize >= self.nx || nj as usize >= self.ny {
            return None;
        }
        Some(self.index(ni as usize, nj as usize))
    }

    /// Step length (in units of `h`) from open cell `a` to open cell `b`,
    /// if `b` is one legal 16-neighborhood step away.  Diagonal and knight
    /// steps additionally need an open corner/intermediate cell so that the
    /// underlying segment does not cross a component.
    pub fn step_between(&self, a: usize, b: usize) -> Option<f64> {
        if !self.open[a] || !self.open[b] {
            return None;
        }
        let (ia, ja) = self.coords(a);
        let (ib, jb) = self.coords(b);
        let (di, dj) = (ib as isize - ia as isize, jb as isize - ja as isize);
        for &((oi, oj), len, mids) in STEP_OFFSETS.iter() {
            if (oi, oj) != (di, dj) {
                continue;
            }
            let legal = match mids {
                None => true,
                Some(pair) => pair.iter().any(|&(mi, mj)| {
                    self.offset_cell(ia, ja, mi, mj).is_some_and(|c| self.open[c])
                }),
            };
            return legal.then_some(len);
        }
        None
    }

    /// Legal steps out of an open cell: `(neighbor cell, length)` with
    /// length in units of `h`.
    pub fn step_neighbors(&self, idx: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (i, j) = self.coords(idx);
        STEP_OFFSETS.iter().filter_map(move |&((di, dj), len, mids)| {
            let c = self.offset_cell(i, j, di, dj)?;
            if !self.open[c] {
                return None;
            }
            let legal = match mids {
                None => true,
                Some(pair) => pair.iter().any(|&(mi, mj)| {
                    self.offset_cell(i, j, mi, mj).is_some_and(|m| self.open[m])
                }),
            };
            legal.then_some((c, len))
        })
    }

    pub fn cell_attached_to(&self, cell: usize, node: usize) -> bool {
        self.nodes_of_cell(cell).contains(&node)
    }

    /// Open cells in grid column `i`.
    pub fn column_cells(&self, i: usize) -> Vec<Vertex> {
        (0..self.ny)
            .map(|j| self.index(i, j))
            .filter(|&c| self.open[c])
            .map(Vertex::Cell)
            .collect()
    }

    /// Open cells in grid row `j`.
    pub fn row_cells(&self, j: usize) -> Vec<Vertex> {
        (0..self.nx)
            .map(|i| self.index(i, j))
            .filter(|&c| self.open[c])
            .map(Vertex::Cell)
            .collect()
    }

    /// Open cells whose center lies in the closed disk `D̄(center, r)`.
    pub fn cells_in_disk(&self, center: Point, r: f64) -> Vec<Vertex> {
        self.open_cells()
            .filter(|&c| self.cell_center(c).dist(center) <= r)
            .map(Vertex::Cell)
            .collect()
    }

    /// Open cells whose center is within `slack` of the circle `S(center, r)`.
    pub fn cells_on_circle(&self, center: Point, r: f64, slack: f64) -> Vec<Vertex> {
        self.open_cells()
            .filter(|&c| (self.cell_center(c).dist(center) - r).abs() <= slack)
            .map(Vertex::Cell)
            .collect()
    }

    /// Open cells whose center is within `slack` of the segment `[a, b]`.
    pub fn cells_near_segment(&self, a: Point, b: Point, slack: f64) -> Vec<Vertex> {
        self.open_cells()
            .filter(|&c| crate::geom::dist_point_segment(self.cell_center(c), a, b) <= slack)
            .map(Vertex::Cell)
            .collect()
    }

    pub fn stats(&self) -> GraphStats {
        let open_cells = self.open_cell_count();
        GraphStats {
            h: self.h,
            nx: self.nx,
            ny: self.ny,
            open_cells,
            blocked_cells: self.cell_count() - open_cells,
            component_nodes: self.node_count(),
            attached_cells_total: self.node_cells.iter().map(Vec::len).sum(),
        }
    }

    /// Occupancy rows bottom-to-top: `'1'` = blocked, `'0'` = open.
    pub fn occupancy_rows(&self) -> Vec<String> {
        (0..self.ny)
            .map(|j| {
                (0..self.nx)
                    .map(|i| if self.open[self.index(i, j)] { '0' } else { '1' })
                    .collect()
            })
            .collect()
    }

    pub fn vertex_in_range(&self, v: Vertex) -> Result<()> {
        match v {
            Vertex::Cell(i) if i >= self.cell_count() => {
                Err(Error::invalid(format!("cell index {i} out of range")))
            }
            Vertex::Node(n) if n >= self.node_count() => {
                Err(Error::invalid(format!("node index {n} out of range")))
            }
            _ => Ok(()),
        }
    }

    /// Linear order for deterministic tie-breaking: cells first by index,
    /// then nodes.
    pub fn linear_index(&self, v: Vertex) -> usize {
        match v {
            Vertex::Cell(i) => i,
            Vertex::Node(n) => self.cell_count() + n,
        }
    }

    pub fn vertex_of(&self, ord: usize) -> Vertex {
        if ord < self.cell_count() {
            Vertex::Cell(ord)
        } else {
            Vertex::Node(ord - self.cell_count())
        }
    }
}

/// Builds the quotient graph of `dom` over `window` at resolution `h`.
///
/// A cell blocks when its center lies within `h/2` of a component; a
/// component meeting the window (a blocked cell, an attached cell, or a
/// boundary sample inside the window) receives a node.
pub fn build_graph(dom: &PlanarDomain, window: BBox, h: f64) -> Result<TransboundaryGraph> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::invalid("grid step h must be positive and finite"));
    }
    let width = window.hi.x - window.lo.x;
    let height = window.hi.y - window.lo.y;
    if !(width > 0.0) || !(height > 0.0) || !width.is_finite() || !height.is_finite() {
        return Err(Error::invalid("window is degenerate"));
    }
    if h > width.min(height) * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "grid step h = {h} exceeds the window side {}",
            width.min(height)
        )));
    }
    let nx = ((width / h) - 1e-9).ceil().max(1.0) as usize;
    let ny = ((height / h) - 1e-9).ceil().max(1.0) as usize;
    if nx.saturating_mul(ny) > MAX_CELLS {
        return Err(Error::invalid(format!(
            "grid of {nx}×{ny} cells exceeds the {MAX_CELLS}-cell cap; increase h"
        )));
    }

    let ncells = nx * ny;
    let mut open = vec![true; ncells];
    let mut blocked_by_comp = vec![u32::MAX; ncells];
    let comps = dom.components();

    let cell_range = |bb: &BBox, pad: f64| -> (usize, usize, usize, usize) {
        let lo_i = ((bb.lo.x - pad - window.lo.x) / h).floor().max(0.0) as usize;
        let lo_j = ((bb.lo.y - pad - window.lo.y) / h).floor().max(0.0) as usize;
        let hi_i = (((bb.hi.x + pad - window.lo.x) / h).ceil().max(0.0) as usize).min(nx);
        let hi_j = (((bb.hi.y + pad - window.lo.y) / h).ceil().max(0.0) as usize).min(ny);
        (lo_i, lo_j, hi_i, hi_j)
    };
    let center_of = |i: usize, j: usize| -> Point {
        Point::new(window.lo.x + (i as f64 + 0.5) * h, window.lo.y + (j as f64 + 0.5) * h)
    };

    // Pass 1: blocking.  First component claiming a cell attributes it.
    for (ci, comp) in comps.iter().enumerate() {
        let (lo_i, lo_j, hi_i, hi_j) = cell_range(&comp.bbox(), BLOCK_FACTOR * h + h);
        for j in lo_j..hi_j {
            for i in lo_i..hi_i {
                let idx = j * nx + i;
                if comp.dist_to_point(center_of(i, j)) <= BLOCK_FACTOR * h {
                    open[idx] = false;
                    if blocked_by_comp[idx] == u32::MAX {
                        blocked_by_comp[idx] = ci as u32;
                    }
                }
            }
        }
    }

    // Pass 2: attachment and node creation.
    let mut node_ids: Vec<String> = Vec::new();
    let mut node_cells: Vec<Vec<usize>> = Vec::new();
    let mut node_of_comp = vec![u32::MAX; comps.len()];
    for (ci, comp) in comps.iter().enumerate() {
        let mut attached: Vec<usize> = Vec::new();
        let (lo_i, lo_j, hi_i, hi_j) = cell_range(&comp.bbox(), ATTACH_FACTOR * h + h);
        for j in lo_j..hi_j {
            for i in lo_i..hi_i {
                let idx = j * nx + i;
                if open[idx] && comp.dist_to_point(center_of(i, j)) <= ATTACH_FACTOR * h {
                    attached.push(idx);
                }
            }
        }
        let blocked_somewhere = blocked_by_comp.iter().any(|&b| b == ci as u32);
        let meets = blocked_somewhere
            || !attached.is_empty()
            || comp.samples().iter().any(|&p| window.contains(p));
        if meets {
            node_of_comp[ci] = node_ids.len() as u32;
            node_ids.push(comp.id().to_string());
            node_cells.push(attached);
        }
    }

    // Remap blocked-cell attribution from component index to node index.
    let blocked_by: Vec<u32> = blocked_by_comp
        .iter()
        .map(|&b| if b == u32::MAX { u32::MAX } else { node_of_comp[b as usize] })
        .collect();

    let mut attach_map: HashMap<usize, Vec<usize>> = HashMap::new();
    for (n, cells) in node_cells.iter().enumerate() {
        for &c in cells {
            attach_map.entry(c).or_default().push(n);
        }
    }

    Ok(TransboundaryGraph {
        window,
        h,
        nx,
        ny,
        open,
        blocked_by,
        node_ids,
        node_cells,
        attach_map,
    })
}

/// Checks that a walk is structurally valid in `g`: steps in range, cells
/// open, consecutive cells one legal step apart, node visits flanked by
/// attached cells, and no node-node adjacency (components are disjoint).
pub fn validate_walk(g: &TransboundaryGraph, w: &DiscreteWalk) -> Result<()> {
    if w.steps.is_empty() {
        return Err(Error::invalid("walk has no steps"));
    }
    for &s in &w.steps {
        g.vertex_in_range(s)?;
        if let Vertex::Cell(i) = s {
            if !g.is_open(i) {
                return Err(Error::invalid(format!("walk uses blocked cell {i}")));
            }
        }
    }
    for pair in w.steps.windows(2) {
        match (pair[0], pair[1]) {
            (Vertex::Cell(a), Vertex::Cell(b)) => {
                if g.step_between(a, b).is_none() {
                    return Err(Error::invalid(format!(
                        "cells {a} and {b} are not one legal step apart"
                    )));
                }
            }
            (Vertex::Cell(c), Vertex::Node(n)) | (Vertex::Node(n), Vertex::Cell(c)) => {
                if !g.cell_attached_to(c, n) {
                    return Err(Error::invalid(format!("cell {c} is not attached to node {n}")));
                }
            }
            (Vertex::Node(_), Vertex::Node(_)) => {
                return Err(Error::invalid("component nodes are never adjacent"));
            }
        }
    }
    Ok(())
}

/// Linear payoff coefficients of a valid walk: `(cell, length)` pairs with
/// lengths summed per distinct cell (ascending), plus the distinct node
/// indices.  The payoff of the walk under `ρ` is
/// `Σ length·ρ(cell) + Σ ρ(node)`.
///
/// Lengths implement the trapezoid quadrature of `∫ ρ ds`: each cell-cell
/// step of length `ℓ` adds `ℓ/2` to both endpoints, and each maximal cell
/// run adds `h/2` caps at its two ends (so a straight `k`-cell run
/// contributes exactly `h` per cell).
pub fn payoff_coefficients(
    g: &TransboundaryGraph,
    w: &DiscreteWalk,
) -> Result<(Vec<(usize, f64)>, Vec<usize>)> {
    validate_walk(g, w)?;
    let h = g.h();
    let mut raw: Vec<(usize, f64)> = Vec::with_capacity(w.steps.len() + 2);
    let mut prev_cell: Option<usize> = None;
    for &s in &w.steps {
        match s {
            Vertex::Cell(c) => {
                match prev_cell {
                    None => raw.push((c, h / 2.0)),
                    Some(p) => {
                        let len = g.step_between(p, c).expect("validated step") * h;
                        raw.push((p, len / 2.0));
                        raw.push((c, len / 2.0));
                    }
                }
                prev_cell = Some(c);
            }
            Vertex::Node(_) => {
                if let Some(p) = prev_cell {
                    raw.push((p, h / 2.0));
                }
                prev_cell = None;
            }
        }
    }
    if let Some(p) = prev_cell {
        raw.push((p, h / 2.0));
    }
    raw.sort_unstable_by_key(|&(c, _)| c);
    let mut cells: Vec<(usize, f64)> = Vec::with_capacity(raw.len());
    for (c, l) in raw {
        match cells.last_mut() {
            Some((lc, ll)) if *lc == c => *ll += l,
            _ => cells.push((c, l)),
        }
    }
    Ok((cells, w.distinct_nodes()))
}

/// Trapezoid payoff of a valid walk: quadrature of `∫ ρ ds` along the cell
/// polyline plus `Σ ρ(node)` over distinct visited nodes.
pub fn walk_payoff(
    g: &TransboundaryGraph,
    w: &DiscreteWalk,
    rho: &DensityAssignment,
) -> Result<f64> {
    rho.validate(g)?;
    let (cells, nodes) = payoff_coefficients(g, w)?;
    let cell_sum: f64 = cells.iter().map(|&(c, l)| l * rho.cell[c]).sum();
    let node_sum: f64 = nodes.iter().map(|&n| rho.node[n]).sum();
    Ok(cell_sum + node_sum)
}

#[derive(PartialEq)]
struct HeapItem {
    cost: f64,
    order: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the smallest
        // (cost, order) pair on top.
        other.cost.total_cmp(&self.cost).then_with(|| other.order.cmp(&self.order))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Payoff-minimizing walk from `from` to `to` avoiding `forbidden` nodes,
/// or `None` when the terminals are disconnected.
///
/// Dijkstra over cells and nodes under the trapezoid payoff: the tentative
/// distance of a cell is the payoff of the best walk ending there (its
/// run-closing `h/2` cap included), so extending a run by a step of length
/// `ℓ` costs `(ℓ−h)/2·ρ(u) + (ℓ+h)/2·ρ(v)`.  Ties break deterministically
/// by `(cost, lexicographic index)`.
pub fn shortest_walk(
    g: &TransboundaryGraph,
    rho: &DensityAssignment,
    from: &[Vertex],
    to: &[Vertex],
    forbidden: &[usize],
) -> Result<Option<DiscreteWalk>> {
    rho.validate(g)?;
    if from.is_empty() || to.is_empty() {
        return Err(Error::invalid("terminal sets must be nonempty"));
    }
    for &v in from.iter().chain(to) {
        g.vertex_in_range(v)?;
        if let Vertex::Cell(i) = v {
            if !g.is_open(i) {
                return Err(Error::invalid(format!("terminal cell {i} is blocked")));
            }
        }
    }
    let mut node_forbidden = vec![false; g.node_count()];
    for &n in forbidden {
        if n >= g.node_count() {
            return Err(Error::invalid(format!("forbidden node index {n} out of range")));
        }
        node_forbidden[n] = true;
    }

    let nv = g.cell_count() + g.node_count();
    let mut dist = vec![f64::INFINITY; nv];
    let mut parent = vec![usize::MAX; nv];
    let mut target = vec![false; nv];
    for &v in to {
        target[g.linear_index(v)] = true;
    }

    let h = g.h();
    let mut heap = std::collections::BinaryHeap::new();
    for &v in from {
        if let Vertex::Node(n) = v {
            if node_forbidden[n] {
                continue;
            }
        }
        let ord = g.linear_index(v);
        let d = match v {
            Vertex::Cell(c) => h * rho.cell[c],
            Vertex::Node(n) => rho.node[n],
        };
        if d < dist[ord] {
            dist[ord] = d;
            heap.push(HeapItem { cost: d, order: ord });
        }
    }

    let mut reached = usize::MAX;
    while let Some(HeapItem { cost, order }) = heap.pop() {
        if cost > dist[order] {
            continue;
        }
        if target[order] {
            reached = order;
            break;
        }
        let mut relax = |v: Vertex, w: f64, heap: &mut std::collections::BinaryHeap<HeapItem>| {
            let ord = g.linear_index(v);
            let nd = cost + w;
            if nd < dist[ord] {
                dist[ord] = nd;
                parent[ord] = order;
                heap.push(HeapItem { cost: nd, order: ord });
            }
        };
        match g.vertex_of(order) {
            Vertex::Cell(c) => {
                for (nb, len) in g.step_neighbors(c) {
                    let w = (len - 1.0) * h / 2.0 * rho.cell[c]
                        + (len + 1.0) * h / 2.0 * rho.cell[nb];
                    relax(Vertex::Cell(nb), w, &mut heap);
                }
                for &n in g.nodes_of_cell(c) {
                    if !node_forbidden[n] {
                        relax(Vertex::Node(n), rho.node[n], &mut heap);
                    }
                }
            }
            Vertex::Node(n) => {
                for &c in g.attached_cells(n) {
                    relax(Vertex::Cell(c), h * rho.cell[c], &mut heap);
                }
            }
        }
    }

    if reached == usize::MAX {
        return Ok(None);
    }
    let mut steps = Vec::new();
    let mut cur = reached;
    while cur != usize::MAX {
        steps.push(g.vertex_of(cur));
        cur = parent[cur];
    }
    steps.reverse();
    let walk = DiscreteWalk { steps, terminal_tags: (true, true) };
    debug_assert!(validate_walk(g, &walk).is_ok());
    debug_assert_eq!(
        walk.distinct_nodes().len(),
        walk.steps.iter().filter(|s| matches!(s, Vertex::Node(_))).count(),
        "optimal walks never revisit a node"
    );
    Ok(Some(walk))
}
