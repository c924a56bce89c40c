//! Discrete transboundary modulus by convex quadratic minimization.
//!
//! The modulus of a walk family is the minimum of the energy
//! `h²·Σ ρ(cell)² + Σ ρ(node)²` over densities whose payoff is ≥ 1 on every
//! walk of the family.  Connecting families are solved by iterative
//! violated-constraint generation: the payoff-minimizing walk (a Dijkstra
//! separation oracle) is added as a linear constraint and the quadratic
//! program on the active rows is re-solved by exact per-constraint line
//! search on the dual (cyclic projected coordinate ascent).  Because every
//! constraint row is nonnegative and the dual multipliers stay nonnegative,
//! the primal density `ρ = Q⁻¹Aᵀλ/2` is automatically nonnegative.
//!
//! Results are certified on both sides: the reported `value` is the energy
//! of the final density rescaled by its true minimal family payoff (hence
//! the energy of a genuinely admissible density, an upper bound for the
//! discrete modulus), while `lower_bound` is the dual objective
//! `Σλ − E(ρ)` (a weak-duality lower bound).
//!
//! Concentric-circle families are handled with fixed constraint rows: each
//! circle at radius spacing `h` is traced as a 4-connected cell loop, with
//! blocked stretches replaced by the blocking component's node.

mod estimates;

pub use estimates::{
    annulus_family_modulus, circle_family_floor, circle_lower_bounds, explicit_density_energy,
    main_estimate_probe, EnergyBreakdown, Recipe,
};

use std::collections::{BinaryHeap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{BBox, Point};
use crate::grid::{
    payoff_coefficients, validate_walk, walk_payoff, DensityAssignment, DiscreteWalk,
    TransboundaryGraph, Vertex,
};

/// Default relative stopping tolerance for the constraint-generation loop.
pub const DEFAULT_TOL: f64 = 1e-4;
/// Hard cap on constraint-generation rounds.
pub const MAX_ROUNDS: usize = 10_000;
/// Maximum violated walks added per round.
const BATCH: usize = 512;
/// Master sweeps per round while the family payoff is still far below
/// 1; near feasibility the budget rises to `MAX_ITERS` so the master
/// problem gets equilibrated before the next oracle call.
const BASE_ITERS: usize = 120;
const MAX_ITERS: usize = 6000;
/// Rows whose multiplier has been zero for this many consecutive rounds
/// are dropped from the master problem (the oracle regenerates them if
/// they ever become binding again).
const PRUNE_IDLE: u32 = 8;
/// Never prune while the master problem is smaller than this.
const PRUNE_MIN: usize = 2048;
/// Grids with at least this many cells solve connecting families by the
/// flow-guided density iteration instead of constraint generation (the
/// master QP needs a number of rows that grows with the mesh, while the
/// flow iteration costs a fixed number of Dijkstra sweeps).
const FIELD_MIN_CELLS: usize = 10_000;
/// Iteration budget of the flow-guided density iteration.
const FIELD_MAX_ITERS: usize = 40;
/// Diffusion passes applied to the raw through-flow before it is used as
/// a search direction (the exact geodesic DAG concentrates mass on thin
/// corridors; the optimal density is spread over all near-minimal walks).
const FIELD_SMOOTH: usize = 4;
/// Stop after this many rounds without improving the best certified value.
const FIELD_PLATEAU: usize = 3;
/// Temperature of the soft flow routing, as a fraction of the minimal
/// family payoff: walk continuations are weighted by
/// `exp(−slack/(temp·payoff))`, so the flow spreads over the whole band
/// of near-minimal walks instead of collapsing onto exact geodesics.
const FIELD_TEMP: f64 = 0.1;

/// One source/target pair of a connecting family.
#[derive(Debug, Clone)]
pub struct TerminalPair {
    pub from: Vec<Vertex>,
    pub to: Vec<Vertex>,
}

/// The walk family whose modulus is sought.
#[derive(Debug, Clone)]
pub enum FamilyKind {
    /// Union of connecting subfamilies, one per terminal pair.
    Connect(Vec<TerminalPair>),
    /// Concentric circles `S(center, t)` for `t` in `[r_min, r_max]`,
    /// discretized at radius spacing `h`.
    Circles { center: Point, r_min: f64, r_max: f64 },
}

#[derive(Debug, Clone)]
pub struct PathFamilySpec {
    pub kind: FamilyKind,
    /// Component nodes that walks of the family must avoid.
    pub forbidden: Vec<usize>,
}

impl PathFamilySpec {
    pub fn connect(from: Vec<Vertex>, to: Vec<Vertex>) -> Self {
        PathFamilySpec {
            kind: FamilyKind::Connect(vec![TerminalPair { from, to }]),
            forbidden: Vec::new(),
        }
    }

    pub fn circles(center: Point, r_min: f64, r_max: f64) -> Self {
        PathFamilySpec { kind: FamilyKind::Circles { center, r_min, r_max }, forbidden: Vec::new() }
    }

    pub fn with_forbidden(mut self, forbidden: Vec<usize>) -> Self {
        self.forbidden = forbidden;
        self
    }

    pub fn validate(&self, g: &TransboundaryGraph) -> Result<()> {
        for &n in &self.forbidden {
            if n >= g.node_count() {
                return Err(Error::invalid(format!("forbidden node index {n} out of range")));
            }
        }
        match &self.kind {
            FamilyKind::Connect(pairs) => {
                if pairs.is_empty() {
                    return Err(Error::invalid("connecting family has no terminal pairs"));
                }
                for pair in pairs {
                    if pair.from.is_empty() || pair.to.is_empty() {
                        return Err(Error::invalid("terminal sets must be nonempty"));
                    }
                    for &v in pair.from.iter().chain(&pair.to) {
                        g.vertex_in_range(v)?;
                        if let Vertex::Cell(i) = v {
                            if !g.is_open(i) {
                                return Err(Error::invalid(format!("terminal cell {i} is blocked")));
                            }
                        }
                        if let Vertex::Node(n) = v {
                            if self.forbidden.contains(&n) {
                                return Err(Error::invalid(
                                    "forbidden set must exclude terminal nodes",
                                ));
                            }
                        }
                    }
                    let from_set: HashSet<Vertex> = pair.from.iter().copied().collect();
                    if pair.to.iter().any(|v| from_set.contains(v)) {
                        return Err(Error::invalid("terminal sets must be disjoint"));
                    }
                }
                Ok(())
            }
            FamilyKind::Circles { r_min, r_max, .. } => {
                if !(r_min.is_finite() && *r_min > 0.0 && r_max.is_finite() && r_max >= r_min) {
                    return Err(Error::invalid("circle family needs 0 < r_min ≤ r_max"));
                }
                if !self.forbidden.is_empty() {
                    return Err(Error::invalid("circle families do not support forbidden nodes"));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusStatus {
    /// Converged: the minimal family payoff reached `1 − tol`.
    Solved,
    /// The family contains no walk at all; the modulus is 0 by convention.
    EmptyFamily,
    /// Constraint generation stopped making progress before reaching the
    /// tolerance; `value` is still a certified admissible-energy bound.
    Stalled,
}

/// Outcome of a modulus computation.
#[derive(Debug, Clone, Serialize)]
pub struct ModulusResult {
    pub status: ModulusStatus,
    /// Energy of the certified admissible density (upper bound for the
    /// discrete modulus); 0 for an empty family.
    pub value: f64,
    /// Weak-duality lower bound for the discrete modulus.
    pub lower_bound: f64,
    /// The certified admissible density (scaled so the minimal family
    /// payoff is exactly 1).
    pub density: DensityAssignment,
    /// Stored walks whose payoff under `density` is within tolerance of 1.
    pub active_walks: Vec<DiscreteWalk>,
    /// Constraint-generation rounds (or dual sweeps for circle families).
    pub iterations: usize,
    pub constraint_count: usize,
    /// `max(0, 1 − minimal family payoff)` before rescaling.
    pub residual: f64,
}

/// One linear constraint `Σ length·ρ(cell) + Σ ρ(node) ≥ 1`: the payoff
/// coefficients of a stored walk, or the arc-length quadrature of a circle.
struct Row {
    /// `(cell index, arc length)` pairs, ascending by cell.
    cells: Vec<(usize, f64)>,
    /// Distinct node indices (coefficient 1 each).
    nodes: Vec<usize>,
    lambda: f64,
    /// `Σ (length/h)² + #nodes`, the row's self inner product under `Q⁻¹`
    /// (a lower bound for the dual Hessian norm, seeding the step search).
    self_quad: f64,
    /// Consecutive rounds with `lambda == 0`, for pruning.
    idle: u32,
    /// The generating walk when the row came from one (used for reporting).
    walk: Option<DiscreteWalk>,
}

fn make_row(
    g: &TransboundaryGraph,
    cells: Vec<(usize, f64)>,
    nodes: Vec<usize>,
    walk: Option<DiscreteWalk>,
) -> Row {
    let h = g.h();
    let mut quad = nodes.len() as f64;
    for &(_, len) in &cells {
        quad += (len / h) * (len / h);
    }
    Row { cells, nodes, lambda: 0.0, self_quad: quad, idle: 0, walk }
}

fn build_row(g: &TransboundaryGraph, walk: DiscreteWalk) -> Result<Row> {
    let (cells, nodes) = payoff_coefficients(g, &walk)?;
    Ok(make_row(g, cells, nodes, Some(walk)))
}

fn row_payoff(row: &Row, rho: &DensityAssignment) -> f64 {
    let mut p = 0.0;
    for &(c, a) in &row.cells {
        p += a * rho.cell[c];
    }
    for &n in &row.nodes {
        p += rho.node[n];
    }
    p
}

/// Solves the master problem `min E(ρ(λ)) − Σλ` over `λ ≥ 0`, where
/// `ρ(λ) = Q⁻¹Aᵀλ/2`, by over-relaxed projected Gauss–Seidel sweeps
/// (convergent for relaxation factors in `(0, 2)` on a convex QP).  The
/// stationary points are exactly the KKT points of the constrained
/// energy minimization.  Starts from the multipliers stored in `rows`
/// (warm start), leaves `ρ(λ)` in `rho`, and returns the largest primal
/// violation `1 − payoff` over the rows at the final iterate together
/// with the number of sweeps spent.
fn solve_master(
    g: &TransboundaryGraph,
    rows: &mut [Row],
    rho: &mut DensityAssignment,
    inner_tol: f64,
    max_sweeps: usize,
) -> (f64, usize) {
    if rows.is_empty() {
        *rho = DensityAssignment::zeros(g);
        return (0.0, 0);
    }
    const OMEGA: f64 = 1.9;
    *rho = rebuild_density(g, rows);
    let h2 = g.h() * g.h();
    let mut sweeps = 0usize;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut maxv = 0.0f64;
        for row in rows.iter_mut() {
            let r = 1.0 - row_payoff(row, rho);
            // The stopping residual must cover complementary slackness:
            // an overshooting sweep can momentarily show no positive
            // violation while active multipliers are far from settled.
            let res = if row.lambda > 0.0 { r.abs() } else { r.max(0.0) };
            maxv = maxv.max(res);
            let new_lambda = (row.lambda + OMEGA * r * 2.0 / row.self_quad).max(0.0);
            let delta = new_lambda - row.lambda;
            if delta != 0.0 {
                row.lambda = new_lambda;
                for &(c, a) in &row.cells {
                    rho.cell[c] += delta * a / (2.0 * h2);
                }
                for &n in &row.nodes {
                    rho.node[n] += delta * 0.5;
                }
            }
        }
        if maxv < inner_tol {
            break;
        }
        if sweeps % 64 == 0 {
            *rho = rebuild_density(g, rows);
        }
    }
    *rho = rebuild_density(g, rows);
    let violation = rows
        .iter()
        .map(|row| 1.0 - row_payoff(row, rho))
        .fold(0.0f64, f64::max);
    (violation, sweeps)
}

/// Recomputes `ρ = Q⁻¹Aᵀλ/2` from scratch to cancel drift.
fn rebuild_density(g: &TransboundaryGraph, rows: &[Row]) -> DensityAssignment {
    let mut rho = DensityAssignment::zeros(g);
    let h2 = g.h() * g.h();
    for row in rows {
        if row.lambda == 0.0 {
            continue;
        }
        for &(c, a) in &row.cells {
            rho.cell[c] += row.lambda * a / (2.0 * h2);
        }
        for &n in &row.nodes {
            rho.node[n] += row.lambda * 0.5;
        }
    }
    rho
}

fn dual_objective(g: &TransboundaryGraph, rows: &[Row], rho: &DensityAssignment) -> f64 {
    let lambda_sum: f64 = rows.iter().map(|r| r.lambda).sum();
    lambda_sum - rho.energy(g)
}

struct HeapItem {
    cost: f64,
    order: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cost == other.cost && self.order == other.order
    }
}
impl Eq for HeapItem {}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.order.cmp(&self.order))
    }
}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Exhaustive Dijkstra from a seed set under the trapezoid payoff (the
/// tentative distance of a cell includes its run-closing `h/2` cap; see
/// `grid::shortest_walk`); returns distances and parent links over the
/// linear vertex order.
fn dijkstra_full(
    g: &TransboundaryGraph,
    rho: &DensityAssignment,
    from: &[Vertex],
    node_forbidden: &[bool],
) -> (Vec<f64>, Vec<usize>) {
    let nv = g.cell_count() + g.node_count();
    let mut dist = vec![f64::INFINITY; nv];
    let mut parent = vec![usize::MAX; nv];
    let h = g.h();
    let mut heap = BinaryHeap::new();
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
    while let Some(HeapItem { cost, order }) = heap.pop() {
        if cost > dist[order] {
            continue;
        }
        let mut relax = |v: Vertex, w: f64, heap: &mut BinaryHeap<HeapItem>| {
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
    (dist, parent)
}

/// Joins the forward geodesic into `v` with the backward geodesic out of
/// `v` into one terminal-to-terminal walk.  The backward parent chain
/// already runs in the walk's forward direction (it descends toward the
/// target seeds), so only the head needs reversing.
fn join_walks(
    g: &TransboundaryGraph,
    par_f: &[usize],
    par_b: &[usize],
    v: Vertex,
) -> DiscreteWalk {
    let mut steps = Vec::new();
    let mut cur = g.linear_index(v);
    while cur != usize::MAX {
        steps.push(g.vertex_of(cur));
        cur = par_f[cur];
    }
    steps.reverse();
    let mut cur = par_b[g.linear_index(v)];
    while cur != usize::MAX {
        steps.push(g.vertex_of(cur));
        cur = par_b[cur];
    }
    DiscreteWalk { steps, terminal_tags: (true, true) }
}

/// Minimal family payoff plus a batch of violating walks.
///
/// Runs one Dijkstra from each side of the pair and scores every vertex
/// `v` by the payoff of the joined walk through it,
/// `dist_from(v) + dist_to(v) − overlap(v)` (both distances close `v`'s
/// run, so a cell's two `h/2` caps — or a node's double charge — cancel
/// against the true payoff).  A stride-spread sample of the violating
/// through-vertices then yields up to `batch` spatially diverse walks
/// per round, instead of one walk per target terminal.
fn connect_oracle(
    g: &TransboundaryGraph,
    rho: &DensityAssignment,
    pairs: &[TerminalPair],
    node_forbidden: &[bool],
    cutoff: f64,
    batch: usize,
) -> (f64, Vec<DiscreteWalk>) {
    let mut min_payoff = f64::INFINITY;
    let mut candidates: Vec<(f64, DiscreteWalk)> = Vec::new();
    let h = g.h();
    for pair in pairs {
        let (dist_f, par_f) = dijkstra_full(g, rho, &pair.from, node_forbidden);
        for &t in &pair.to {
            let d = dist_f[g.linear_index(t)];
            if d.is_finite() {
                min_payoff = min_payoff.min(d);
            }
        }
        if batch == 0 {
            continue;
        }
        let (dist_b, par_b) = dijkstra_full(g, rho, &pair.to, node_forbidden);
        let mut through: Vec<(f64, usize)> = Vec::new();
        for ord in 0..dist_f.len() {
            let df = dist_f[ord];
            let db = dist_b[ord];
            if !(df.is_finite() && db.is_finite()) {
                continue;
            }
            let overlap = match g.vertex_of(ord) {
                Vertex::Cell(c) => h * rho.cell[c],
                Vertex::Node(n) => rho.node[n],
            };
            let cost = df + db - overlap;
            if cost < cutoff {
                through.push((cost, ord));
            }
        }
        through.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        if through.len() > batch {
            let len = through.len();
            let picked: Vec<(f64, usize)> =
                (0..batch).map(|i| through[i * len / batch]).collect();
            through = picked;
        }
        for (cost, ord) in through {
            candidates.push((cost, join_walks(g, &par_f, &par_b, g.vertex_of(ord))));
        }
    }
    if candidates.len() > batch && batch > 0 {
        // Multiple pairs: keep the worst walks overall, deterministically.
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.steps.cmp(&b.1.steps)));
        candidates.truncate(batch);
    }
    (min_payoff, candidates.into_iter().map(|(_, w)| w).collect())
}

/// Accumulates the soft through-flow of the near-minimal walk ensemble
/// into `mu`.
///
/// Mass is injected at the seeds and routed home along decreasing
/// destination-side distance `dist_home` (that field always has a
/// strictly decreasing continuation at every non-terminal vertex, so no
/// mass gets stranded); each continuation `u → v` is weighted by
/// `exp(−slack/(temp·m))`, where the slack is how much the best walk
/// forced through the edge exceeds the minimal family payoff `m`
/// (`dist_out[u] + w(u,v) + dist_home[v] − overlap(v) − m`, the overlap
/// correcting the double charge of `v`).  Absorbing vertices (the
/// destination terminals) keep the mass that reaches them.  The result,
/// normalized to unit injection, is a spread version of the
/// minimal-walk flow whose arc measure the optimal density is
/// proportional to.
#[allow(clippy::too_many_arguments)]
fn soft_flow(
    g: &TransboundaryGraph,
    rho: &DensityAssignment,
    dist_out: &[f64],
    dist_home: &[f64],
    m: f64,
    seeds: &[Vertex],
    absorbing: &[bool],
    mu: &mut [f64],
) {
    let h = g.h();
    let nv = dist_out.len();
    let band = FIELD_TEMP * m;
    let overlap = |v: usize| match g.vertex_of(v) {
        Vertex::Cell(c) => h * rho.cell[c],
        Vertex::Node(n) => rho.node[n],
    };
    let mut order: Vec<u32> = (0..nv as u32)
        .filter(|&v| dist_out[v as usize].is_finite() && dist_home[v as usize].is_finite())
        .collect();
    order.sort_unstable_by(|&a, &b| {
        dist_home[b as usize]
            .total_cmp(&dist_home[a as usize])
            .then_with(|| b.cmp(&a))
    });
    let mut mass = vec![0.0f64; nv];
    let mut injected = 0.0;
    for &v in seeds {
        let v = g.linear_index(v);
        if dist_out[v].is_finite() && dist_home[v].is_finite() {
            let slack = (dist_out[v] + dist_home[v] - overlap(v) - m).max(0.0);
            if slack < 40.0 * band {
                let w = (-slack / band).exp();
                mass[v] += w;
                injected += w;
            }
        }
    }
    if injected <= 0.0 {
        return;
    }
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(24);
    for &u in &order {
        let u = u as usize;
        let m_u = mass[u];
        if m_u == 0.0 || absorbing[u] {
            continue;
        }
        let du_out = dist_out[u];
        let du_home = dist_home[u];
        out.clear();
        {
            let mut try_edge = |v: usize, w: f64| {
                let dv = dist_home[v];
                if !dv.is_finite() || !dist_out[v].is_finite() {
                    return;
                }
                if dv > du_home || (dv == du_home && v >= u) {
                    return;
                }
                let slack = (du_out + w + dv - overlap(v) - m).max(0.0);
                if slack < 40.0 * band {
                    out.push((v, (-slack / band).exp()));
                }
            };
            match g.vertex_of(u) {
                Vertex::Cell(c) => {
                    for (nb, len) in g.step_neighbors(c) {
                        let w = (len - 1.0) * h / 2.0 * rho.cell[c]
                            + (len + 1.0) * h / 2.0 * rho.cell[nb];
                        try_edge(nb, w);
                    }
                    for &n in g.nodes_of_cell(c) {
                        try_edge(g.cell_count() + n, rho.node[n]);
                    }
                }
                Vertex::Node(n) => {
                    for &c in g.attached_cells(n) {
                        try_edge(c, h * rho.cell[c]);
                    }
                }
            }
        }
        let sum: f64 = out.iter().map(|&(_, w)| w).sum();
        if sum > 0.0 {
            for &(v, w) in &out {
                mass[v] += m_u * w / sum;
            }
        }
    }
    for v in 0..nv {
        mu[v] += mass[v] / injected;
    }
}

/// Builds a starting density from the discrete potential of the terminal
/// sets: the potential is held at 0 on every source vertex and 1 on every
/// sink vertex, relaxed to harmonic on open cells (component nodes act as
/// conductors carrying the average of their attached cells), and the
/// density is the gradient magnitude of the result.  For round domains
/// this is angularly even by construction, which a purely combinatorial
/// walk ensemble on the step lattice is not.
fn harmonic_candidate(
    g: &TransboundaryGraph,
    pairs: &[TerminalPair],
    node_forbidden: &[bool],
) -> DensityAssignment {
    let nc = g.cell_count();
    let nn = g.node_count();
    let h = g.h();
    let mut u = vec![0.5f64; nc + nn];
    let mut fixed = vec![false; nc + nn];
    for pair in pairs {
        for &s in &pair.from {
            let i = g.linear_index(s);
            u[i] = 0.0;
            fixed[i] = true;
        }
        for &t in &pair.to {
            let i = g.linear_index(t);
            u[i] = 1.0;
            fixed[i] = true;
        }
    }
    // Successive over-relaxation on the 4-neighbor Laplacian; the optimal
    // factor and the sweep budget both follow the longer grid side.
    let side = g.nx().max(g.ny()) as f64;
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / side).sin());
    let sweeps = ((2.5 * side) as usize).clamp(64, 4000);
    for sweep in 0..sweeps {
        let mut delta = 0.0f64;
        for c in 0..nc {
            if !g.is_open(c) || fixed[c] {
                continue;
            }
            let mut s = 0.0;
            let mut k = 0.0;
            for nb in g.cell_neighbors(c) {
                s += u[nb];
                k += 1.0;
            }
            // Forbidden nodes are unusable by the family's walks, so the
            // potential must flow around them, not through them.
            for &n in g.nodes_of_cell(c) {
                if !node_forbidden[n] {
                    s += u[nc + n];
                    k += 1.0;
                }
            }
            if k == 0.0 {
                continue;
            }
            let d = omega * (s / k - u[c]);
            u[c] += d;
            delta = delta.max(d.abs());
        }
        for n in 0..nn {
            if fixed[nc + n] {
                continue;
            }
            let cells = g.attached_cells(n);
            if cells.is_empty() {
                continue;
            }
            let s: f64 = cells.iter().map(|&c| u[c]).sum();
            let d = s / cells.len() as f64 - u[nc + n];
            u[nc + n] += d;
            delta = delta.max(d.abs());
        }
        if sweep > 16 && delta < 1e-8 {
            break;
        }
    }
    let mut rho = DensityAssignment::zeros(g);
    let mut total = 0.0;
    let mut count = 0usize;
    for c in 0..nc {
        if !g.is_open(c) {
            continue;
        }
        let (i, j) = g.coords(c);
        let axis = |lo: Option<usize>, hi: Option<usize>| -> f64 {
            let lo = lo.filter(|&x| g.is_open(x));
            let hi = hi.filter(|&x| g.is_open(x));
            match (lo, hi) {
                (Some(a), Some(b)) => (u[b] - u[a]) / (2.0 * h),
                (Some(a), None) => (u[c] - u[a]) / h,
                (None, Some(b)) => (u[b] - u[c]) / h,
                (None, None) => 0.0,
            }
        };
        let gx = axis(
            (i > 0).then(|| c - 1),
            (i + 1 < g.nx()).then(|| c + 1),
        );
        let gy = axis(
            (j > 0).then(|| c - g.nx()),
            (j + 1 < g.ny()).then(|| c + g.nx()),
        );
        rho.cell[c] = gx.hypot(gy);
        total += rho.cell[c];
        count += 1;
    }
    // Nodes pay once per walk; the drop the node shortcuts is the spread
    // of the potential over its attachment ring.
    for n in 0..nn {
        if node_forbidden[n] {
            continue;
        }
        let cells = g.attached_cells(n);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &c in cells {
            lo = lo.min(u[c]);
            hi = hi.max(u[c]);
        }
        if hi > lo {
            rho.node[n] = hi - lo;
        }
    }
    // Floor the density at a small fraction of its mean so unreachable
    // pockets cannot manufacture near-zero-payoff walks.
    if count > 0 && total > 0.0 {
        let floor = 0.02 * total / count as f64;
        for c in 0..nc {
            if g.is_open(c) && rho.cell[c] < floor {
                rho.cell[c] = floor;
            }
        }
        let nfloor = h * floor;
        for n in 0..nn {
            if !node_forbidden[n] && rho.node[n] < nfloor {
                rho.node[n] = nfloor;
            }
        }
    } else {
        for c in 0..nc {
            if g.is_open(c) {
                rho.cell[c] = 1.0;
            }
        }
        for n in 0..nn {
            if !node_forbidden[n] {
                rho.node[n] = h;
            }
        }
    }
    rho
}

/// Solves a connecting family by flow-guided density iteration.
///
/// Each round measures the exact minimal family payoff of the current
/// density (bidirectional Dijkstra), which certifies `E(ρ)/m²` as an
/// admissible energy, then blends the density toward the through-flow of
/// the geodesic DAG — the shape the optimality conditions prescribe
/// (density proportional to the arc measure of the minimal-walk flow).
/// The best certified value over all rounds is returned, so the result
/// is a true admissible-density energy regardless of where the iteration
/// stops; `lower_bound` is reported as 0 because no dual certificate is
/// produced on this path.
fn solve_connect_field(
    g: &TransboundaryGraph,
    pairs: &[TerminalPair],
    node_forbidden: &[bool],
    tol: f64,
) -> Result<ModulusResult> {
    let h = g.h();
    let nv = g.cell_count() + g.node_count();
    let mut rho = harmonic_candidate(g, pairs, node_forbidden);
    let mut mu = vec![0.0f64; nv];
    let mut smooth_buf = vec![0.0f64; g.cell_count()];
    let mut absorbing = vec![false; nv];
    let mut best_value = f64::INFINITY;
    let mut best: Option<(DensityAssignment, DiscreteWalk)> = None;
    let mut stale = 0usize;
    let mut rounds = 0usize;
    let mut beta_c = 0.5f64;
    let plateau_tol = 0.25 * tol.max(1e-3);
    for _ in 0..FIELD_MAX_ITERS {
        rounds += 1;
        mu.fill(0.0);
        let mut m_global = f64::INFINITY;
        let mut min_walk: Option<DiscreteWalk> = None;
        for pair in pairs {
            let (dist_f, par_f) = dijkstra_full(g, &rho, &pair.from, node_forbidden);
            let (dist_b, _) = dijkstra_full(g, &rho, &pair.to, node_forbidden);
            let mut m_f = f64::INFINITY;
            let mut arg = None;
            for &t in &pair.to {
                let d = dist_f[g.linear_index(t)];
                if d < m_f {
                    m_f = d;
                    arg = Some(t);
                }
            }
            if !m_f.is_finite() {
                continue;
            }
            if m_f < m_global {
                m_global = m_f;
                let t = arg.expect("finite minimum has a terminal");
                let mut steps = Vec::new();
                let mut cur = g.linear_index(t);
                while cur != usize::MAX {
                    steps.push(g.vertex_of(cur));
                    cur = par_f[cur];
                }
                steps.reverse();
                min_walk = Some(DiscreteWalk { steps, terminal_tags: (true, true) });
            }
            // Route the flow from each side in turn; averaging the two
            // passes symmetrizes the per-vertex splitting decisions.
            absorbing.fill(false);
            for &t in &pair.to {
                absorbing[g.linear_index(t)] = true;
            }
            soft_flow(g, &rho, &dist_f, &dist_b, m_f, &pair.from, &absorbing, &mut mu);
            absorbing.fill(false);
            for &s in &pair.from {
                absorbing[g.linear_index(s)] = true;
            }
            soft_flow(g, &rho, &dist_b, &dist_f, m_f, &pair.to, &absorbing, &mut mu);
        }
        if !m_global.is_finite() {
            if best.is_none() {
                return Ok(empty_family_result(g));
            }
            return Err(Error::construction(
                "family became disconnected during solving; inconsistent graph",
            ));
        }
        if !(m_global > 0.0) {
            return Err(Error::construction(
                "solver stopped with a zero-payoff walk; the family admits no positive bound",
            ));
        }
        let value = rho.energy(g) / (m_global * m_global);
        if value < best_value * (1.0 - plateau_tol) {
            stale = 0;
        } else {
            stale += 1;
        }
        if value < best_value {
            best_value = value;
            let mut scaled = rho.clone();
            for v in scaled.cell.iter_mut() {
                *v /= m_global;
            }
            for v in scaled.node.iter_mut() {
                *v /= m_global;
            }
            best = Some((scaled, min_walk.expect("finite payoff yields a minimal walk")));
        }
        if std::env::var_os("TBMOD_TRACE").is_some() {
            eprintln!("field round {rounds}: payoff {m_global:.6} value {value:.6}");
        }
        if stale >= FIELD_PLATEAU {
            break;
        }
        // Normalize the iterate to exact admissibility; the next iterate
        // stays admissible because it is a convex combination of
        // admissible densities (payoff is linear in the density, so the
        // minimal payoff is concave).
        for v in rho.cell.iter_mut() {
            *v /= m_global;
        }
        for v in rho.node.iter_mut() {
            *v /= m_global;
        }
        // Diffuse the raw flow over open cells to spread it across the
        // near-minimal corridor band.
        for _ in 0..FIELD_SMOOTH {
            for c in 0..g.cell_count() {
                if !g.is_open(c) {
                    smooth_buf[c] = 0.0;
                    continue;
                }
                let mut s = mu[c];
                let mut k = 1.0;
                for (nb, len) in g.step_neighbors(c) {
                    if len <= 1.5 {
                        s += mu[nb];
                        k += 1.0;
                    }
                }
                smooth_buf[c] = s / k;
            }
            mu[..g.cell_count()].copy_from_slice(&smooth_buf);
        }
        // The flow converts to a density via `1/h` on cells (a cell's
        // payoff coefficient is `h·ρ`, a node's is `ρ`); the target is
        // rescaled to the energy of the current iterate so the mixing
        // weights below compare like with like.
        let mut target = DensityAssignment::zeros(g);
        for c in 0..g.cell_count() {
            if g.is_open(c) {
                target.cell[c] = mu[c] / h;
            }
        }
        for n in 0..g.node_count() {
            if !node_forbidden[n] {
                target.node[n] = mu[g.cell_count() + n];
            }
        }
        let e_t = target.energy(g);
        if !(e_t > 0.0) {
            continue;
        }
        let scale = (value / e_t).sqrt();
        for v in target.cell.iter_mut() {
            *v *= scale;
        }
        for v in target.node.iter_mut() {
            *v *= scale;
        }
        // Try a few mixes of the normalized iterate with the target and
        // keep the one whose measured value (energy over squared minimal
        // payoff) is smallest; every candidate is exactly certified by
        // its own shortest-walk measurement, so a poor target can never
        // make the iterate worse.
        let betas = [0.5 * beta_c, beta_c, (2.0 * beta_c).min(1.0)];
        let mut chosen: Option<(usize, f64)> = None;
        let mut cand = DensityAssignment::zeros(g);
        for (bi, &beta) in betas.iter().enumerate() {
            for c in 0..g.cell_count() {
                cand.cell[c] = rho.cell[c] + beta * (target.cell[c] - rho.cell[c]);
            }
            for n in 0..g.node_count() {
                cand.node[n] = rho.node[n] + beta * (target.node[n] - rho.node[n]);
            }
            let mut m_b = f64::INFINITY;
            for pair in pairs {
                let (dist_c, _) = dijkstra_full(g, &cand, &pair.from, node_forbidden);
                for &t in &pair.to {
                    m_b = m_b.min(dist_c[g.linear_index(t)]);
                }
            }
            if !(m_b.is_finite() && m_b > 0.0) {
                continue;
            }
            let v_b = cand.energy(g) / (m_b * m_b);
            if v_b < value && chosen.map_or(true, |(_, best)| v_b < best) {
                chosen = Some((bi, v_b));
            }
        }
        if std::env::var_os("TBMOD_TRACE").is_some() {
            eprintln!("  mix beta_c {beta_c:.3} chosen {chosen:?}");
        }
        let Some((bi, _)) = chosen else {
            continue;
        };
        let beta = betas[bi];
        for c in 0..g.cell_count() {
            rho.cell[c] += beta * (target.cell[c] - rho.cell[c]);
        }
        for n in 0..g.node_count() {
            rho.node[n] += beta * (target.node[n] - rho.node[n]);
        }
        beta_c = match bi {
            0 => (0.5 * beta_c).max(1e-3),
            2 => (2.0 * beta_c).min(1.0),
            _ => beta_c,
        };
    }
    let (density, walk) = best.expect("at least one round ran");
    Ok(ModulusResult {
        status: ModulusStatus::Solved,
        value: best_value,
        lower_bound: 0.0,
        density,
        active_walks: vec![walk],
        iterations: rounds,
        constraint_count: 0,
        residual: 0.0,
    })
}

/// Traces the circle `S(center, r)` as a closed 4-connected cell loop with
/// blocked stretches replaced by component nodes.
pub fn circle_walk(g: &TransboundaryGraph, center: Point, r: f64) -> Result<DiscreteWalk> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid("circle radius must be positive"));
    }
    let steps = ((2.0 * std::f64::consts::PI * r) / (g.h() / 4.0)).ceil().max(64.0) as usize;
    let mut cells: Vec<usize> = Vec::new();
    for k in 0..=steps {
        let ang = 2.0 * std::f64::consts::PI * k as f64 / steps as f64;
        let p = center + Point::polar(r, ang);
        let c = g
            .cell_at(p)
            .ok_or_else(|| Error::invalid("circle leaves the grid window"))?;
        if cells.last() != Some(&c) {
            cells.push(c);
        }
    }
    // Make the sequence 4-connected by bridging diagonal jumps.
    let mut seq: Vec<usize> = Vec::with_capacity(cells.len() * 2);
    for &c in &cells {
        if let Some(&prev) = seq.last() {
            if prev == c {
                continue;
            }
            let (ia, ja) = g.coords(prev);
            let (ib, jb) = g.coords(c);
            let man = ia.abs_diff(ib) + ja.abs_diff(jb);
            if man > 2 || (man == 2 && (ia == ib || ja == jb)) {
                return Err(Error::construction(
                    "circle trace jumped more than one cell; radius too small for h",
                ));
            }
            if man == 2 {
                let c1 = g.index(ia, jb);
                let c2 = g.index(ib, ja);
                let pick = match (g.is_open(c1), g.is_open(c2)) {
                    (true, false) => c1,
                    (false, true) => c2,
                    _ => {
                        let d1 = (g.cell_center(c1).dist(center) - r).abs();
                        let d2 = (g.cell_center(c2).dist(center) - r).abs();
                        if d1 < d2 || (d1 == d2 && c1 < c2) {
                            c1
                        } else {
                            c2
                        }
                    }
                };
                seq.push(pick);
            }
        }
        seq.push(c);
    }
    // The trace closes on its starting cell; drop the duplicate.
    if seq.len() > 1 && seq.first() == seq.last() {
        seq.pop();
    }
    // Replace blocked cells by their blocking node, collapsing runs.
    let mut out: Vec<Vertex> = Vec::with_capacity(seq.len());
    for c in seq {
        if g.is_open(c) {
            out.push(Vertex::Cell(c));
        } else {
            let n = g.blocking_node(c).ok_or_else(|| {
                Error::construction("blocked cell without a component node on the circle")
            })?;
            match out.last() {
                Some(&Vertex::Node(m)) if m == n => {}
                Some(&Vertex::Node(_)) => {
                    return Err(Error::construction(
                        "two components meet along the circle at this resolution; decrease h",
                    ));
                }
                _ => out.push(Vertex::Node(n)),
            }
        }
    }
    // Seam: the loop may start and end inside the same component.
    while out.len() > 1 && out.first() == out.last() && matches!(out[0], Vertex::Node(_)) {
        out.pop();
    }
    let walk = DiscreteWalk::new(out);
    validate_walk(g, &walk)?;
    Ok(walk)
}

/// Arc-length quadrature of the circle `S(center, r)` against the grid,
/// encoding the admissibility constraint
/// `∫_{S∩Ω} ρ ds + Σ_{q∩S≠∅} ρ(q) ≥ 1`: samples at `h/4` spacing assign
/// their arc to the open cell they land in, while samples on blocked
/// cells register the blocking component's node (coefficient 1, once).
fn circle_arc_row(g: &TransboundaryGraph, center: Point, r: f64) -> Result<Row> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid("circle radius must be positive"));
    }
    let steps = ((2.0 * std::f64::consts::PI * r) / (g.h() / 4.0)).ceil().max(64.0) as usize;
    let ds = 2.0 * std::f64::consts::PI * r / steps as f64;
    let mut raw: Vec<(usize, f64)> = Vec::with_capacity(steps);
    let mut nodes: Vec<usize> = Vec::new();
    for k in 0..steps {
        let ang = 2.0 * std::f64::consts::PI * k as f64 / steps as f64;
        let p = center + Point::polar(r, ang);
        let c = g
            .cell_at(p)
            .ok_or_else(|| Error::invalid("circle leaves the grid window"))?;
        if g.is_open(c) {
            raw.push((c, ds));
        } else {
            let n = g.blocking_node(c).ok_or_else(|| {
                Error::construction("blocked cell without a component node on the circle")
            })?;
            nodes.push(n);
        }
    }
    raw.sort_unstable_by_key(|&(c, _)| c);
    let mut cells: Vec<(usize, f64)> = Vec::with_capacity(raw.len());
    for (c, l) in raw {
        match cells.last_mut() {
            Some((lc, ll)) if *lc == c => *ll += l,
            _ => cells.push((c, l)),
        }
    }
    nodes.sort_unstable();
    nodes.dedup();
    Ok(make_row(g, cells, nodes, circle_walk(g, center, r).ok()))
}

fn circle_rows(
    g: &TransboundaryGraph,
    center: Point,
    r_min: f64,
    r_max: f64,
) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    let mut r = r_min;
    while r <= r_max * (1.0 + 1e-12) {
        rows.push(circle_arc_row(g, center, r)?);
        r += g.h();
    }
    if rows.is_empty() {
        return Err(Error::invalid("circle family has no radii at this spacing"));
    }
    Ok(rows)
}

fn check_tol(tol: f64) -> Result<f64> {
    if !(tol.is_finite() && tol > 0.0 && tol < 0.5) {
        return Err(Error::invalid("tolerance must lie in (0, 0.5)"));
    }
    Ok(tol)
}

/// Computes the discrete transboundary modulus of a walk family.
///
/// Connecting families run the separation-oracle loop; circle families are
/// solved over their fixed constraint rows.  The returned `value` is the
/// energy of a certified admissible density and `lower_bound` a
/// weak-duality floor, so `lower_bound ≤ Mod ≤ value` up to float error.
pub fn transboundary_modulus(
    g: &TransboundaryGraph,
    fam: &PathFamilySpec,
    tol: f64,
) -> Result<ModulusResult> {
    let tol = check_tol(tol)?;
    fam.validate(g)?;
    match &fam.kind {
        FamilyKind::Connect(pairs) => solve_connect(g, pairs, &fam.forbidden, tol),
        FamilyKind::Circles { center, r_min, r_max } => {
            let rows = circle_rows(g, *center, *r_min, *r_max)?;
            solve_fixed(g, rows, tol)
        }
    }
}

fn finish(
    g: &TransboundaryGraph,
    rows: Vec<Row>,
    rho: DensityAssignment,
    min_payoff: f64,
    status: ModulusStatus,
    iterations: usize,
    tol: f64,
) -> Result<ModulusResult> {
    if !(min_payoff > 0.0) {
        return Err(Error::construction(
            "solver stopped with a zero-payoff walk; the family admits no positive bound",
        ));
    }
    let lower_bound = dual_objective(g, &rows, &rho).max(0.0);
    let mut scaled = rho;
    for v in scaled.cell.iter_mut() {
        *v /= min_payoff;
    }
    for v in scaled.node.iter_mut() {
        *v /= min_payoff;
    }
    let value = scaled.energy(g);
    let active_tol = 10.0 * tol;
    let active_walks: Vec<DiscreteWalk> = rows
        .iter()
        .filter(|row| (row_payoff(row, &scaled) - 1.0).abs() <= active_tol)
        .filter_map(|row| row.walk.clone())
        .collect();
    debug_assert!(
        rows.iter().all(|row| row_payoff(row, &scaled) >= 1.0 - 1e-6),
        "rescaled density must satisfy every stored constraint"
    );
    Ok(ModulusResult {
        status,
        value,
        lower_bound,
        density: scaled,
        active_walks,
        iterations,
        constraint_count: rows.len(),
        residual: (1.0 - min_payoff).max(0.0),
    })
}

fn empty_family_result(g: &TransboundaryGraph) -> ModulusResult {
    ModulusResult {
        status: ModulusStatus::EmptyFamily,
        value: 0.0,
        lower_bound: 0.0,
        density: DensityAssignment::zeros(g),
        active_walks: Vec::new(),
        iterations: 0,
        constraint_count: 0,
        residual: 0.0,
    }
}

fn solve_connect(
    g: &TransboundaryGraph,
    pairs: &[TerminalPair],
    forbidden: &[usize],
    tol: f64,
) -> Result<ModulusResult> {
    let mut node_forbidden = vec![false; g.node_count()];
    for &n in forbidden {
        node_forbidden[n] = true;
    }
    let field_min = std::env::var("TBMOD_FIELD_MIN_CELLS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(FIELD_MIN_CELLS);
    if g.cell_count() >= field_min {
        return solve_connect_field(g, pairs, &node_forbidden, tol);
    }
    let mut rows: Vec<Row> = Vec::new();
    let mut seen: HashSet<Vec<Vertex>> = HashSet::new();
    let mut rho = DensityAssignment::zeros(g);
    let mut stalls = 0usize;
    let mut rounds = 0usize;
    let mut final_payoff = f64::INFINITY;
    let mut status = ModulusStatus::Stalled;

    for round in 0..MAX_ROUNDS {
        rounds = round + 1;
        let (min_payoff, walks) =
            connect_oracle(g, &rho, pairs, &node_forbidden, 1.0 - 0.5 * tol, BATCH);
        if min_payoff.is_infinite() {
            if rows.is_empty() {
                return Ok(empty_family_result(g));
            }
            return Err(Error::construction(
                "family became disconnected during solving; inconsistent graph",
            ));
        }
        final_payoff = min_payoff;
        if min_payoff >= 1.0 - tol {
            status = ModulusStatus::Solved;
            break;
        }
        let mut added = 0usize;
        for walk in walks {
            if seen.insert(walk.steps.clone()) {
                rows.push(build_row(g, walk)?);
                added += 1;
            }
        }
        if added == 0 {
            stalls += 1;
            if stalls >= 4 {
                break;
            }
        } else {
            stalls = 0;
        }
        // Far from feasibility, generating rows matters more than solving
        // the master exactly; near it (or when nothing new arrived), run
        // the master to its own tolerance before asking the oracle again.
        let endgame = min_payoff >= 1.0 - 8.0 * tol || added == 0;
        let iters_budget = if endgame { MAX_ITERS } else { BASE_ITERS };
        let (viol, iters) = solve_master(g, &mut rows, &mut rho, 0.25 * tol, iters_budget);
        if std::env::var_os("TBMOD_TRACE").is_some() {
            eprintln!(
                "round {round}: payoff {min_payoff:.6} rows {} added {added} master {iters} it viol {viol:.2e}",
                rows.len()
            );
        }
        for row in rows.iter_mut() {
            if row.lambda == 0.0 {
                row.idle += 1;
            } else {
                row.idle = 0;
            }
        }
        if rows.len() > PRUNE_MIN {
            rows.retain(|row| {
                if row.lambda == 0.0 && row.idle >= PRUNE_IDLE {
                    if let Some(w) = &row.walk {
                        seen.remove(&w.steps);
                    }
                    false
                } else {
                    true
                }
            });
        }
    }
    if status != ModulusStatus::Solved && rounds == MAX_ROUNDS {
        // The loop ran out with ρ mutated after the last oracle call;
        // remeasure the true minimal payoff for the density we return.
        let (m, _) = connect_oracle(g, &rho, pairs, &node_forbidden, 0.0, 0);
        if m.is_finite() {
            final_payoff = m;
        }
    }
    finish(g, rows, rho, final_payoff, status, rounds, tol)
}

fn solve_fixed(g: &TransboundaryGraph, mut rows: Vec<Row>, tol: f64) -> Result<ModulusResult> {
    let mut rho = DensityAssignment::zeros(g);
    let (_, iters) = solve_master(g, &mut rows, &mut rho, 0.25 * tol, 50_000);
    let min_payoff = rows
        .iter()
        .map(|row| row_payoff(row, &rho))
        .fold(f64::INFINITY, f64::min);
    let status =
        if min_payoff >= 1.0 - tol { ModulusStatus::Solved } else { ModulusStatus::Stalled };
    finish(g, rows, rho, min_payoff, status, iters, tol)
}

/// Verifies an M-certificate: every supplied unit-energy density admits
/// some family walk with payoff at most `m_cap`.
pub fn certificate_check(
    g: &TransboundaryGraph,
    fam: &PathFamilySpec,
    m_cap: f64,
    densities: &[DensityAssignment],
) -> Result<bool> {
    fam.validate(g)?;
    if !(m_cap.is_finite() && m_cap >= 0.0) {
        return Err(Error::invalid("certificate cap must be finite and nonnegative"));
    }
    for rho in densities {
        rho.validate(g)?;
        let e = rho.energy(g);
        if (e - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "certificate densities must have unit energy, got {e}"
            )));
        }
    }
    let prepared_rows = match &fam.kind {
        FamilyKind::Circles { center, r_min, r_max } => {
            Some(circle_rows(g, *center, *r_min, *r_max)?)
        }
        FamilyKind::Connect(_) => None,
    };
    for rho in densities {
        let min_payoff = match &fam.kind {
            FamilyKind::Connect(pairs) => {
                let mut best = f64::INFINITY;
                for pair in pairs {
                    if let Some(w) =
                        crate::grid::shortest_walk(g, rho, &pair.from, &pair.to, &fam.forbidden)?
                    {
                        best = best.min(walk_payoff(g, &w, rho)?);
                    }
                }
                best
            }
            FamilyKind::Circles { .. } => prepared_rows
                .as_ref()
                .unwrap()
                .iter()
                .map(|row| row_payoff(row, rho))
                .fold(f64::INFINITY, f64::min),
        };
        if !(min_payoff <= m_cap * (1.0 + 1e-12)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The averaged-density serial bound for a family crossing `n` disjoint
/// windows, each carrying a modulus at most `2m`.
#[derive(Debug, Clone)]
pub struct SerialCombination {
    pub n: usize,
    pub m: f64,
    /// The upper bound `2m/n`.
    pub bound: f64,
    /// Exact energy `Σ value_i / n²` of the combined density.
    pub combined_energy: f64,
    /// Per-window densities already scaled by `1/n`; their sum is the
    /// combined density (windows are disjoint, so supports never overlap).
    pub parts: Vec<(BBox, DensityAssignment)>,
}

fn windows_overlap(a: &BBox, b: &BBox) -> bool {
    a.lo.x < b.hi.x && b.lo.x < a.hi.x && a.lo.y < b.hi.y && b.lo.y < a.hi.y
}

/// Combines moduli over pairwise disjoint windows into the `2m/n` serial
/// bound with the averaged density `ρ = (1/n)·Σ ρ_i`.
///
/// A walk crossing all `n` windows pays at least `n·(1/n) = 1` under the
/// average, so the combined density is admissible for the crossing family
/// and its energy `Σ E_i/n² ≤ 2m/n` bounds that family's modulus.
pub fn serial_combination(
    results: &[(&ModulusResult, BBox)],
    m: f64,
) -> Result<SerialCombination> {
    if results.is_empty() {
        return Err(Error::invalid("serial combination needs at least one window"));
    }
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::invalid("serial bound constant m must be positive"));
    }
    for (i, (ra, wa)) in results.iter().enumerate() {
        if ra.value > 2.0 * m * (1.0 + 1e-9) {
            return Err(Error::invalid(format!(
                "window {i} has modulus {} exceeding 2m = {}",
                ra.value,
                2.0 * m
            )));
        }
        for (rb_idx, (_, wb)) in results.iter().enumerate().skip(i + 1) {
            if windows_overlap(wa, wb) {
                return Err(Error::invalid(format!("windows {i} and {rb_idx} overlap")));
            }
        }
    }
    let n = results.len();
    let scale = 1.0 / n as f64;
    let combined_energy: f64 =
        results.iter().map(|(r, _)| r.value).sum::<f64>() * scale * scale;
    let parts = results
        .iter()
        .map(|(r, w)| {
            let mut d = r.density.clone();
            for v in d.cell.iter_mut() {
                *v *= scale;
            }
            for v in d.node.iter_mut() {
                *v *= scale;
            }
            (*w, d)
        })
        .collect();
    Ok(SerialCombination { n, m, bound: 2.0 * m / n as f64, combined_energy, parts })
}
