//! Empty-cell contour machinery in dimension 2.
//!
//! The plane is tiled by square cells of side q = 2d + delta anchored at the
//! box center (the finite-volume stand-in for the origin). A c-contour is a
//! simple cycle of empty cells whose center polygon winds around the anchor;
//! its length is the cell count. A b-contour is a particle-free ell-thickened
//! closed curve around the anchor, detected conservatively on a fine lattice.
//!
//! Cycle detection is exact: a breadth-first search over (cell, winding-layer)
//! states finds the shortest closed walk crossing a reference ray a net of
//! once, which is necessarily a simple, chord-free cycle.

use crate::bounds::{alpha_constant, g_function};
use crate::sampler::Configuration;
use std::collections::{BTreeSet, HashMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ContourError {
    #[error("contour too short: n = {n} does not exceed 2 sqrt(2) a / d = {min:.3}")]
    ContourTooShort { n: usize, min: f64 },
    #[error("invalid necklace window: {0}")]
    InvalidWindow(String),
}

/// Origin-anchored square tiling of a box. Cell (k, l) covers
/// [k q, (k+1) q) x [l q, (l+1) q) in coordinates relative to the anchor.
#[derive(Clone, Copy, Debug)]
pub struct CellGrid {
    pub q: f64,
    pub delta: f64,
    pub box_len: f64,
    /// World coordinates of the lattice origin (the box center).
    pub anchor: [f64; 2],
}

impl CellGrid {
    /// Grid with cell side 2 d + delta anchored at the center of [0, L]^2.
    pub fn centered(box_len: f64, d: f64, delta: f64) -> CellGrid {
        assert!(d > 0.0 && delta > 0.0 && box_len > 0.0);
        CellGrid { q: 2.0 * d + delta, delta, box_len, anchor: [box_len / 2.0, box_len / 2.0] }
    }

    /// The crossover radius this grid was sized for, (q - delta) / 2.
    pub fn d(&self) -> f64 {
        (self.q - self.delta) / 2.0
    }

    pub fn cell_of(&self, x: f64, y: f64) -> (i32, i32) {
        (
            ((x - self.anchor[0]) / self.q).floor() as i32,
            ((y - self.anchor[1]) / self.q).floor() as i32,
        )
    }

    /// Cell center in world coordinates.
    pub fn center(&self, cell: (i32, i32)) -> [f64; 2] {
        [
            self.anchor[0] + (cell.0 as f64 + 0.5) * self.q,
            self.anchor[1] + (cell.1 as f64 + 0.5) * self.q,
        ]
    }

    /// Inclusive index ranges of the cells lying entirely inside the box.
    /// Cells straddling the boundary are excluded: with a free boundary they
    /// would be counted empty for the wrong reason.
    pub fn interior_range(&self) -> ((i32, i32), (i32, i32)) {
        let lo_k = (-self.anchor[0] / self.q).ceil() as i32;
        let hi_k = ((self.box_len - self.anchor[0]) / self.q).floor() as i32 - 1;
        let lo_l = (-self.anchor[1] / self.q).ceil() as i32;
        let hi_l = ((self.box_len - self.anchor[1]) / self.q).floor() as i32 - 1;
        ((lo_k, hi_k), (lo_l, hi_l))
    }

    pub fn cell_area(&self) -> f64 {
        self.q * self.q
    }
}

/// Interior cells containing no point of the configuration.
pub fn empty_cells(cfg: &Configuration, grid: &CellGrid) -> BTreeSet<(i32, i32)> {
    assert_eq!(cfg.dim(), 2, "contour analysis is two-dimensional");
    let ((lo_k, hi_k), (lo_l, hi_l)) = grid.interior_range();
    let mut cells = BTreeSet::new();
    for k in lo_k..=hi_k {
        for l in lo_l..=hi_l {
            cells.insert((k, l));
        }
    }
    for pt in cfg.iter_points() {
        cells.remove(&grid.cell_of(pt[0], pt[1]));
    }
    cells
}

/// Union-find carrying an integer potential offset to each node's root.
/// A union asserting an inconsistent offset reveals a cycle with nonzero net
/// weight.
struct OffsetUnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
    /// Potential of the node minus the potential of its parent.
    offset: Vec<i64>,
}

impl OffsetUnionFind {
    fn new(n: usize) -> OffsetUnionFind {
        OffsetUnionFind { parent: (0..n as u32).collect(), rank: vec![0; n], offset: vec![0; n] }
    }

    /// Root of x and the potential of x relative to that root.
    fn find(&mut self, x: u32) -> (u32, i64) {
        if self.parent[x as usize] == x {
            return (x, 0);
        }
        let (root, parent_off) = self.find(self.parent[x as usize]);
        self.offset[x as usize] += parent_off;
        self.parent[x as usize] = root;
        (root, self.offset[x as usize])
    }

    /// Impose potential(b) = potential(a) + w; false on contradiction.
    fn union(&mut self, a: u32, b: u32, w: i64) -> bool {
        let (ra, oa) = self.find(a);
        let (rb, ob) = self.find(b);
        if ra == rb {
            return ob == oa + w;
        }
        // offset of rb relative to ra if rb hangs under ra
        let rel = oa + w - ob;
        if self.rank[ra as usize] >= self.rank[rb as usize] {
            self.parent[rb as usize] = ra;
            self.offset[rb as usize] = rel;
            if self.rank[ra as usize] == self.rank[rb as usize] {
                self.rank[ra as usize] += 1;
            }
        } else {
            self.parent[ra as usize] = rb;
            self.offset[ra as usize] = -rel;
        }
        true
    }
}

/// A closed 4-adjacent walk through open cells winding around the lattice
/// origin exists iff no consistent potential can assign every open cell a
/// winding level: ordinary edges force equal levels, edges crossing the
/// reference ray (vertical, between rows -1 and 0 at k >= 0) force a step of
/// one. Any contradiction is a nonzero-winding cycle, and in the plane a
/// nonzero winding implies winding one.
fn enclosing_cycle_exists<F: Fn(i32, i32) -> bool>(
    open: &F,
    (lo_k, hi_k): (i32, i32),
    (lo_l, hi_l): (i32, i32),
) -> bool {
    if lo_k > hi_k || lo_l > hi_l || hi_k < 0 || lo_l > -1 || hi_l < 0 {
        return false;
    }
    let rows = (hi_l - lo_l + 1) as usize;
    let cols = (hi_k - lo_k + 1) as usize;
    let idx = |k: i32, l: i32| ((k - lo_k) as usize * rows + (l - lo_l) as usize) as u32;
    let mut uf = OffsetUnionFind::new(cols * rows);
    for k in lo_k..=hi_k {
        for l in lo_l..=hi_l {
            if !open(k, l) {
                continue;
            }
            if k + 1 <= hi_k && open(k + 1, l) {
                if !uf.union(idx(k, l), idx(k + 1, l), 0) {
                    return true;
                }
            }
            if l + 1 <= hi_l && open(k, l + 1) {
                let weight = i64::from(k >= 0 && l == -1);
                if !uf.union(idx(k, l), idx(k, l + 1), weight) {
                    return true;
                }
            }
        }
    }
    false
}

/// Shortest closed 4-adjacent walk through open cells that winds around the
/// lattice origin. Exact: a breadth-first search over (cell, net signed ray
/// crossings) states, run from every open cell just above the ray (each
/// enclosing cycle contains one), with the net-crossing coordinate unbounded
/// so snaking cycles are found too. The global minimum over the starts is a
/// simple chord-free cycle: any repeat or chord would split off a strictly
/// shorter winding walk through some ray cell.
fn shortest_enclosing_cycle<F: Fn(i32, i32) -> bool>(
    open: F,
    (lo_k, hi_k): (i32, i32),
    (lo_l, hi_l): (i32, i32),
) -> Option<Vec<(i32, i32)>> {
    if !enclosing_cycle_exists(&open, (lo_k, hi_k), (lo_l, hi_l)) {
        return None;
    }
    let mut best: Option<Vec<(i32, i32)>> = None;
    for start_k in 0.max(lo_k)..=hi_k {
        if !open(start_k, 0) {
            continue;
        }
        let start = (start_k, 0, 0_i32);
        let target_budget = best.as_ref().map(|b| b.len());
        let mut parent: HashMap<(i32, i32, i32), (i32, i32, i32)> = HashMap::new();
        let mut dist: HashMap<(i32, i32, i32), usize> = HashMap::new();
        let mut queue = VecDeque::new();
        dist.insert(start, 0);
        queue.push_back(start);
        let mut found: Option<(i32, i32, i32)> = None;
        'bfs: while let Some(state) = queue.pop_front() {
            let d = dist[&state];
            if let Some(budget) = target_budget {
                if d + 1 >= budget {
                    continue; // cannot beat the current best
                }
            }
            let (k, l, layer) = state;
            for (dk, dl) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (nk, nl) = (k + dk, l + dl);
                if nk < lo_k || nk > hi_k || nl < lo_l || nl > hi_l || !open(nk, nl) {
                    continue;
                }
                let crossing = if k >= 0 && dk == 0 {
                    if l == -1 && dl == 1 {
                        1
                    } else if l == 0 && dl == -1 {
                        -1
                    } else {
                        0
                    }
                } else {
                    0
                };
                let next = (nk, nl, layer + crossing);
                if (nk, nl) == (start_k, 0) && next.2 != 0 {
                    if next.2.abs() == 1 {
                        parent.insert(next, state);
                        dist.insert(next, d + 1);
                        found = Some(next);
                        break 'bfs;
                    }
                    continue;
                }
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(next) {
                    e.insert(d + 1);
                    parent.insert(next, state);
                    queue.push_back(next);
                }
            }
        }
        if let Some(end) = found {
            let mut cells = Vec::with_capacity(dist[&end]);
            let mut cur = end;
            while cur != start {
                cells.push((cur.0, cur.1));
                cur = parent[&cur];
            }
            cells.reverse();
            if best.as_ref().map_or(true, |b| cells.len() < b.len()) {
                best = Some(cells);
            }
        }
    }
    // the potential test said a winding cycle exists, so the search must
    // produce one
    debug_assert!(best.is_some(), "existence test and cycle search disagree");
    best
}

/// Even-odd test of a lattice point against a cell-center polygon. Queries
/// are cell centers not on the polygon, so no degenerate case arises: only
/// vertical polygon edges can straddle the query's y, at a distinct x.
fn inside_polygon(p: [f64; 2], polygon: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = polygon.len();
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            // straddling edges are vertical here; intersection at x = a[0]
            let x_int = a[0] + (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]);
            if x_int > p[0] {
                inside = !inside;
            }
        }
    }
    inside
}

/// One empty-cell contour around the anchor: a simple chord-free cycle.
#[derive(Clone, Debug)]
pub struct Contour {
    /// Cells in cycle order.
    pub cells: Vec<(i32, i32)>,
    /// Contour length n: the number of cells.
    pub n: usize,
    pub encloses_origin: bool,
}

impl Contour {
    /// Closed polygon through the cell centers, world coordinates.
    pub fn polygon(&self, grid: &CellGrid) -> Vec<[f64; 2]> {
        self.cells.iter().map(|&c| grid.center(c)).collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct ContourReport {
    pub contours: Vec<Contour>,
}

/// Detects the nested minimal empty-cell contours around the anchor, inner
/// first. Each peel finds the shortest enclosing cycle among the remaining
/// empty cells, then discards that cycle and everything inside it, so every
/// distinct circuit is reported once.
pub fn c_contours_around_origin(
    empty: &BTreeSet<(i32, i32)>,
    grid: &CellGrid,
) -> ContourReport {
    let ((lo_k, hi_k), (lo_l, hi_l)) = grid.interior_range();
    let mut open = empty.clone();
    let mut report = ContourReport::default();
    loop {
        let cycle =
            shortest_enclosing_cycle(|k, l| open.contains(&(k, l)), (lo_k, hi_k), (lo_l, hi_l));
        let Some(cells) = cycle else { break };
        let polygon: Vec<[f64; 2]> = cells
            .iter()
            .map(|&(k, l)| [(k as f64 + 0.5) * grid.q, (l as f64 + 0.5) * grid.q])
            .collect();
        let cycle_set: BTreeSet<(i32, i32)> = cells.iter().copied().collect();
        open.retain(|&(k, l)| {
            !cycle_set.contains(&(k, l))
                && !inside_polygon([(k as f64 + 0.5) * grid.q, (l as f64 + 0.5) * grid.q], &polygon)
        });
        report.contours.push(Contour { n: cells.len(), cells, encloses_origin: true });
    }
    report
}

/// Envelope parameters for the contour-length statistics.
#[derive(Clone, Copy, Debug)]
pub struct EnvelopeParams {
    pub beta: f64,
    pub lambda: f64,
    /// Attraction level m and window (a, eps) behind the supercritical curve.
    pub m: f64,
    pub eps: f64,
    pub a: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct LengthStat {
    pub n: usize,
    /// Fraction of snapshots with at least one enclosing contour of length n.
    pub empirical_freq: f64,
    /// c(beta) exp(-n alpha G), when G > 0.
    pub envelope: Option<f64>,
}

/// Per-length frequency of enclosing contours over a snapshot set, with the
/// theoretical envelope attached where its rate is positive.
pub fn contour_statistics(
    snapshots: &[Configuration],
    grid: &CellGrid,
    envelope: Option<&EnvelopeParams>,
) -> Vec<LengthStat> {
    let mut counts: HashMap<usize, u64> = HashMap::new();
    for cfg in snapshots {
        let empty = empty_cells(cfg, grid);
        let report = c_contours_around_origin(&empty, grid);
        let lengths: BTreeSet<usize> = report.contours.iter().map(|c| c.n).collect();
        for n in lengths {
            *counts.entry(n).or_insert(0) += 1;
        }
    }
    let total = snapshots.len() as f64;
    let mut rows: Vec<LengthStat> = counts
        .into_iter()
        .map(|(n, count)| {
            let envelope = envelope.and_then(|e| {
                let g = g_function(e.beta, e.lambda, e.m, e.eps);
                if g > 0.0 {
                    let alpha = alpha_constant(e.a, e.eps, grid.d(), grid.delta);
                    Some((e.beta * e.m).exp() * (-(n as f64) * alpha * g).exp())
                } else {
                    None
                }
            });
            LengthStat { n, empirical_freq: count as f64 / total, envelope }
        })
        .collect();
    rows.sort_by_key(|r| r.n);
    rows
}

/// Greedy chord walk: successive points along a closed polyline at chord
/// distance exactly `step`, starting from the first vertex. Stops after one
/// lap; the closing pair may be closer than `step`.
pub fn chord_walk(polygon: &[[f64; 2]], step: f64, max_points: usize) -> Vec<[f64; 2]> {
    assert!(polygon.len() >= 2 && step > 0.0);
    let n = polygon.len();
    let seg_len: Vec<f64> = (0..n)
        .map(|i| {
            let a = polygon[i];
            let b = polygon[(i + 1) % n];
            ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
        })
        .collect();
    let perimeter: f64 = seg_len.iter().sum();
    let mut points = vec![polygon[0]];
    let mut seg = 0_usize; // current segment index
    let mut t = 0.0_f64; // position along current segment
    let mut arc = 0.0_f64; // cumulative arc from the start
    'walk: while points.len() < max_points {
        let x = *points.last().unwrap();
        // scan forward for the first curve point at chord distance `step`
        let (mut s, mut t0, mut travelled) = (seg, t, arc);
        loop {
            let a = polygon[s % n];
            let b = polygon[(s + 1) % n];
            let len = seg_len[s % n];
            if len > 0.0 {
                let ux = (b[0] - a[0]) / len;
                let uy = (b[1] - a[1]) / len;
                let wx = a[0] - x[0];
                let wy = a[1] - x[1];
                let proj = wx * ux + wy * uy;
                let w2 = wx * wx + wy * wy;
                let disc = proj * proj - w2 + step * step;
                if disc >= 0.0 {
                    let hit = -proj + disc.sqrt();
                    if hit > t0 && hit <= len {
                        let next_arc = travelled + (hit - t0);
                        if next_arc >= perimeter {
                            break 'walk; // lapped past the start
                        }
                        points.push([a[0] + hit * ux, a[1] + hit * uy]);
                        seg = s;
                        t = hit;
                        arc = next_arc;
                        continue 'walk;
                    }
                }
            }
            travelled += len - t0;
            t0 = 0.0;
            s += 1;
            if travelled >= arc + perimeter {
                break 'walk; // whole curve inside the chord ball
            }
        }
    }
    points
}

/// Necklace point set along a contour: a greedy walk with chord a + eps/2
/// within the curve, as many points as one lap admits (capped by the exact
/// arc-length budget floor(q n / (a + eps/2))).
pub fn necklace_points(
    contour: &Contour,
    grid: &CellGrid,
    a: f64,
    eps: f64,
) -> Result<Vec<[f64; 2]>, ContourError> {
    if !(eps > 0.0) || !(a >= grid.d()) {
        return Err(ContourError::InvalidWindow(format!(
            "need eps > 0 and a >= d, got a = {a}, eps = {eps}, d = {}",
            grid.d()
        )));
    }
    let min = 2.0 * std::f64::consts::SQRT_2 * a / grid.d();
    if contour.n as f64 <= min {
        return Err(ContourError::ContourTooShort { n: contour.n, min });
    }
    let step = a + eps / 2.0;
    let cap = (grid.q * contour.n as f64 / step).floor() as usize;
    Ok(chord_walk(&contour.polygon(grid), step, cap))
}

/// A cell entirely covered by the disc of radius r at `center` (world
/// coordinates), if one exists. Guaranteed for r > sqrt(2) q. The scan order
/// is deterministic (lexicographic in the cell index).
pub fn coin_covers_cell(center: [f64; 2], r: f64, grid: &CellGrid) -> Option<(i32, i32)> {
    assert!(r > 0.0);
    let (k0, l0) = grid.cell_of(center[0] - r, center[1] - r);
    let (k1, l1) = grid.cell_of(center[0] + r, center[1] + r);
    for k in k0..=k1 {
        for l in l0..=l1 {
            let lo = grid.center((k, l));
            let (half, r2) = (grid.q / 2.0, r * r);
            let dx = (center[0] - lo[0]).abs() + half;
            let dy = (center[1] - lo[1]).abs() + half;
            // farthest cell corner from the disc center
            if dx * dx + dy * dy <= r2 {
                return Some((k, l));
            }
        }
    }
    None
}

/// True iff a closed curve around the anchor exists whose every point keeps
/// distance > ell from all particles. Detected on a fine lattice (step
/// <= ell/8) with a one-step safety margin, so a positive answer is always
/// genuine while false negatives vanish as the step shrinks.
pub fn b_contour_exists(
    cfg: &Configuration,
    ell: f64,
    grid: &CellGrid,
    fine_step: Option<f64>,
) -> bool {
    assert_eq!(cfg.dim(), 2);
    let h = fine_step.unwrap_or(ell / 8.0).min(ell / 8.0);
    let margin = h;
    let reach = ell + margin;
    let box_len = grid.box_len;

    // bin the particles for radius queries
    let bin_side = reach * 1.0001;
    let per_axis = ((box_len / bin_side).floor() as usize).max(1);
    let side = box_len / per_axis as f64;
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); per_axis * per_axis];
    let axis_of = |c: f64| ((c / side) as usize).min(per_axis - 1);
    for (i, pt) in cfg.iter_points().enumerate() {
        bins[axis_of(pt[0]) * per_axis + axis_of(pt[1])].push(i as u32);
    }
    let clear = |x: f64, y: f64| -> bool {
        let (bx, by) = (axis_of(x) as i64, axis_of(y) as i64);
        for dx in -1..=1_i64 {
            for dy in -1..=1_i64 {
                let (cx, cy) = (bx + dx, by + dy);
                if cx < 0 || cy < 0 || cx >= per_axis as i64 || cy >= per_axis as i64 {
                    continue;
                }
                for &i in &bins[cx as usize * per_axis + cy as usize] {
                    let pt = cfg.position(i as usize);
                    let d2 = (pt[0] - x).powi(2) + (pt[1] - y).powi(2);
                    if d2 <= reach * reach {
                        return false;
                    }
                }
            }
        }
        true
    };

    // fine site lattice anchored like the cell grid; site (i, j) sits at
    // anchor + ((i + 1/2) h, (j + 1/2) h)
    let lo_i = (-grid.anchor[0] / h).ceil() as i32;
    let hi_i = ((box_len - grid.anchor[0]) / h).floor() as i32 - 1;
    let lo_j = (-grid.anchor[1] / h).ceil() as i32;
    let hi_j = ((box_len - grid.anchor[1]) / h).floor() as i32 - 1;
    let cols = (hi_i - lo_i + 1) as usize;
    let rows = (hi_j - lo_j + 1) as usize;
    if cols == 0 || rows == 0 {
        return false;
    }
    let mut mask = vec![false; cols * rows];
    for i in lo_i..=hi_i {
        for j in lo_j..=hi_j {
            let x = grid.anchor[0] + (i as f64 + 0.5) * h;
            let y = grid.anchor[1] + (j as f64 + 0.5) * h;
            mask[(i - lo_i) as usize * rows + (j - lo_j) as usize] = clear(x, y);
        }
    }
    enclosing_cycle_exists(
        &|i, j| mask[(i - lo_i) as usize * rows + (j - lo_j) as usize],
        (lo_i, hi_i),
        (lo_j, hi_j),
    )
}
