//! Adaptive cubature for integrands with power-law singularities on affine sets.
//!
//! Cells are refined globally by largest error estimate. Each cell is
//! integrated by a tensor Gauss–Legendre rule of order 5, with the order-3
//! rule as the error reference. Codimension-one singular planes are resolved
//! by an iterated line rule: each line is split where it crosses a plane and
//! every piece is graded toward its singular end with `t = a + L u^k`, which
//! turns `|t - t*|^{-s}` into a polynomial weight. Cells touched by sets of
//! higher codimension charge their whole absolute mass as error, so bisection
//! refines geometrically toward them.

mod apply;
mod ball;
pub mod gauss;
mod singular;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::Exec;

pub use apply::{riesz_block_apply, tensor_apply, BlockKernel, RieszKernel, UnitKernel};
pub use ball::{integrate_ball, BallRule};
pub use gauss::GaussRule;
pub use singular::{grading_power, Plane, SingularSet};

/// Cells smaller than this, relative to their coordinates, may be limited by
/// cancellation in `y - y*` inside the integrand.
const NOISE_SCALE: f64 = 1e-3;

/// Largest dimension accepted by the cubature.
pub const MAX_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadError {
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("dimension {0} is outside 1..={MAX_DIM}")]
    Dimension(usize),
    #[error("alpha = {alpha} must lie in (0, {dim})")]
    InvalidAlpha { alpha: f64, dim: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Axis-aligned box `[lower, upper]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl IntegrationBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, QuadError> {
        if lower.len() != upper.len() {
            return Err(QuadError::InvalidBox(format!(
                "{} lower vs {} upper coordinates",
                lower.len(),
                upper.len()
            )));
        }
        if lower.is_empty() || lower.len() > MAX_DIM {
            return Err(QuadError::Dimension(lower.len()));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] < upper[i]) || !(upper[i] - lower[i]).is_finite()) {
            return Err(QuadError::InvalidBox(format!(
                "coordinate {i}: lower {} is not below upper {}",
                lower[i], upper[i]
            )));
        }
        Ok(Self { lower, upper })
    }

    /// `center + [-half, half]^d`.
    pub fn cube(center: &[f64], half: f64) -> Result<Self, QuadError> {
        Self::new(
            center.iter().map(|c| c - half).collect(),
            center.iter().map(|c| c + half).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * (0..self.dim()).map(|i| self.width(i).powi(2)).sum::<f64>().sqrt()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (a, b))| a <= v && v <= b)
    }

    /// False once the longest side is too short, relative to the coordinates,
    /// for graded nodes to stay distinct in floating point.
    pub fn resolvable(&self) -> bool {
        (0..self.dim()).any(|i| {
            let scale = self.lower[i].abs().max(self.upper[i].abs());
            self.width(i) > 1e-7 * scale
        })
    }

    /// Longest side relative to the coordinate magnitude on that axis.
    fn relative_size(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.width(i) / self.lower[i].abs().max(self.upper[i].abs()).max(self.width(i)))
            .fold(0.0, f64::max)
    }

    /// Halves along the longest side.
    pub fn bisect(&self) -> (Self, Self) {
        let axis = (0..self.dim())
            .max_by(|&i, &j| self.width(i).total_cmp(&self.width(j)).then(j.cmp(&i)))
            .unwrap_or(0);
        let mid = 0.5 * (self.lower[axis] + self.upper[axis]);
        let mut left = self.clone();
        let mut right = self.clone();
        left.upper[axis] = mid;
        right.lower[axis] = mid;
        (left, right)
    }

    /// Coordinates `range` of this box as a lower-dimensional box.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            lower: self.lower[range.clone()].to_vec(),
            upper: self.upper[range].to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    /// Cells of the final partition.
    pub cells: usize,
    /// Final cells resolved by a singular rule, plus cells where a non-finite
    /// node was dropped at the depth limit.
    pub singular_cells: usize,
    pub evals: usize,
    /// False when the tolerance was not met within the evaluation budget.
    pub converged: bool,
}

impl QuadResult {
    pub fn flagged(&self) -> bool {
        !self.converged
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Tolerance relative to the integral of `|f|`; useful when cancellation
    /// makes the value itself small.
    pub l1_rel_tol: Option<f64>,
    pub max_evals: usize,
    pub max_depth: u32,
    /// Upper bound on cells refined per sweep.
    pub batch: usize,
    pub exec: Exec,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 0.0,
            l1_rel_tol: None,
            max_evals: 1_000_000,
            max_depth: 80,
            batch: 8,
            exec: Exec::Sequential,
        }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_l1_rel_tol(mut self, tol: f64) -> Self {
        self.l1_rel_tol = Some(tol);
        self
    }

    pub fn with_max_evals(mut self, max_evals: usize) -> Self {
        self.max_evals = max_evals;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    fn target(&self, value: f64, l1: f64) -> f64 {
        let mut t = self.abs_tol.max(self.rel_tol * value.abs());
        if let Some(l) = self.l1_rel_tol {
            t = t.max(l * l1);
        }
        t
    }
}

/// Integrates `f` over `domain`. The integrand may return a non-finite value
/// at points of a singular set; such cells are split further.
pub fn adaptive_integrate<F>(f: &F, domain: &IntegrationBox, opts: &QuadOptions, sets: &[SingularSet]) -> QuadResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    adaptive_integrate_cells(f, std::slice::from_ref(domain), opts, sets)
}

/// As [`adaptive_integrate`], starting from a given partition.
pub fn adaptive_integrate_cells<F>(
    f: &F,
    initial: &[IntegrationBox],
    opts: &QuadOptions,
    sets: &[SingularSet],
) -> QuadResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut engine = Engine {
        f,
        sets,
        opts,
        cells: Vec::new(),
        heap: BinaryHeap::new(),
        evals: 0,
    };
    let seeds: Vec<(IntegrationBox, u32)> = initial.iter().map(|b| (b.clone(), 0)).collect();
    engine.insert(seeds, None);
    engine.run()
}

struct Cell {
    bx: IntegrationBox,
    depth: u32,
    eval: CellEval,
    active: bool,
}

#[derive(Clone, Copy, Debug, Default)]
struct CellEval {
    value: f64,
    err: f64,
    l1: f64,
    evals: usize,
    singular: bool,
    dropped: bool,
}

#[derive(PartialEq)]
struct Key {
    err: f64,
    idx: usize,
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        // larger error first, then older cell
        self.err.total_cmp(&other.err).then(other.idx.cmp(&self.idx))
    }
}

struct Engine<'a, F> {
    f: &'a F,
    sets: &'a [SingularSet],
    opts: &'a QuadOptions,
    cells: Vec<Cell>,
    heap: BinaryHeap<Key>,
    evals: usize,
}

impl<F> Engine<'_, F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    /// Evaluates and queues new cells. Consecutive pairs in `boxes` are
    /// siblings when `parents` is given; a singular parent whose split did not
    /// reduce the error has hit the rounding floor, and its children are frozen.
    fn insert(&mut self, boxes: Vec<(IntegrationBox, u32)>, parents: Option<&[CellEval]>) {
        let max_depth = self.opts.max_depth;
        let evals = self.opts.exec.map(&boxes, |(bx, depth)| {
            eval_cell(self.f, bx, self.sets, *depth >= max_depth || !bx.resolvable())
        });
        let stalled: Vec<bool> = match parents {
            Some(ps) => ps
                .iter()
                .zip(evals.chunks(2).zip(boxes.chunks(2)))
                .flat_map(|(p, (kids, kid_boxes))| {
                    let after: f64 = kids.iter().map(|k| k.err).sum();
                    let small = kid_boxes[0].0.relative_size() < NOISE_SCALE;
                    let stuck = small && p.singular && p.err.is_finite() && after >= p.err;
                    [stuck, stuck]
                })
                .collect(),
            None => vec![false; boxes.len()],
        };
        for (((bx, depth), eval), stuck) in boxes.into_iter().zip(evals).zip(stalled) {
            self.evals += eval.evals;
            let idx = self.cells.len();
            if depth < max_depth && bx.resolvable() && !stuck {
                self.heap.push(Key { err: eval.err, idx });
            }
            self.cells.push(Cell {
                bx,
                depth,
                eval,
                active: true,
            });
        }
    }

    fn totals(&self) -> (f64, f64, f64) {
        let mut value = 0.0;
        let mut err = 0.0;
        let mut l1 = 0.0;
        for c in self.cells.iter().filter(|c| c.active) {
            value += c.eval.value;
            err += c.eval.err;
            l1 += c.eval.l1;
        }
        (value, err, l1)
    }

    fn run(mut self) -> QuadResult {
        let mut converged = false;
        loop {
            let (value, err, l1) = self.totals();
            if err <= self.opts.target(value, l1) {
                converged = true;
                break;
            }
            if self.evals >= self.opts.max_evals {
                break;
            }
            let Some(top) = self.heap.pop() else { break };
            let mut batch = vec![top.idx];
            while batch.len() < self.opts.batch.max(1) {
                match self.heap.peek() {
                    Some(k) if k.err >= 0.1 * top.err => batch.push(self.heap.pop().expect("peeked").idx),
                    _ => break,
                }
            }
            let mut children = Vec::with_capacity(2 * batch.len());
            let mut parents = Vec::with_capacity(batch.len());
            for idx in batch {
                let cell = &mut self.cells[idx];
                cell.active = false;
                parents.push(cell.eval);
                let (a, b) = cell.bx.bisect();
                children.push((a, cell.depth + 1));
                children.push((b, cell.depth + 1));
            }
            self.insert(children, Some(&parents));
        }
        let (value, err, _) = self.totals();
        let active = self.cells.iter().filter(|c| c.active);
        let (cells, singular_cells) = active.fold((0, 0), |(n, s), c| {
            (n + 1, s + usize::from(c.eval.singular || c.eval.dropped))
        });
        QuadResult {
            value,
            error_estimate: err,
            cells,
            singular_cells,
            evals: self.evals,
            converged,
        }
    }
}

#[derive(Clone, Copy)]
enum Order {
    High,
    Low,
}

impl Order {
    /// Points of the plain and the graded rule.
    fn points(self) -> (usize, usize) {
        match self {
            Order::High => (5, 10),
            Order::Low => (3, 5),
        }
    }
}

#[derive(Default)]
struct Acc {
    sum: f64,
    abs: f64,
    evals: usize,
    bad: bool,
}

fn eval_cell<F>(f: &F, bx: &IntegrationBox, sets: &[SingularSet], drop_bad: bool) -> CellEval
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = bx.dim();
    let mut by_level: Vec<Vec<Plane>> = vec![Vec::new(); d];
    let mut charged = false;
    for s in sets.iter().filter(|s| s.touches(bx)) {
        match s.plane() {
            Some(p) => {
                for edge in [bx.lower[p.level], bx.upper[p.level]] {
                    if let Some(e) = p.edge_plane(edge) {
                        by_level[e.level].push(e);
                    }
                }
                by_level[p.level].push(p.clone());
            }
            None => charged = true,
        }
    }
    let singular = charged || by_level.iter().any(|l| !l.is_empty());
    let mut y = vec![0.0; d];
    let mut hi = Acc::default();
    nest(f, bx, &by_level, Order::High, 0, &mut y, 1.0, &mut hi);
    let mut lo = Acc::default();
    nest(f, bx, &by_level, Order::Low, 0, &mut y, 1.0, &mut lo);
    let evals = hi.evals + lo.evals;
    let bad = hi.bad || lo.bad;
    // graded nodes can round onto the singular set; their weight is negligible
    let lined = by_level.iter().any(|l| !l.is_empty());
    if bad && !drop_bad && !lined {
        return CellEval {
            value: 0.0,
            err: f64::INFINITY,
            l1: 0.0,
            evals,
            singular: true,
            dropped: false,
        };
    }
    let mut err = (hi.sum - lo.sum).abs();
    if charged {
        err = err.max(hi.abs);
    }
    CellEval {
        value: hi.sum,
        err,
        l1: hi.abs,
        evals,
        singular,
        dropped: bad,
    }
}

#[allow(clippy::too_many_arguments)]
fn nest<F>(
    f: &F,
    bx: &IntegrationBox,
    planes: &[Vec<Plane>],
    order: Order,
    level: usize,
    y: &mut Vec<f64>,
    weight: f64,
    acc: &mut Acc,
) where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let line = line_rule(bx.lower[level], bx.upper[level], &planes[level], &y[..level], order);
    let last = level + 1 == bx.dim();
    for (t, w) in line {
        y[level] = t;
        let w = weight * w;
        if last {
            let v = f(y);
            acc.evals += 1;
            if v.is_finite() {
                acc.sum += w * v;
                acc.abs += w * v.abs();
            } else {
                acc.bad = true;
            }
        } else {
            nest(f, bx, planes, order, level + 1, y, w, acc);
        }
    }
}

/// A singular point on a line: location, grading power and peak half-width.
#[derive(Clone, Copy, Debug)]
struct Spot {
    t: f64,
    k: f64,
    width: f64,
}

/// One-dimensional rule on `[a, b]` for the line through `prefix`.
fn line_rule(a: f64, b: f64, planes: &[Plane], prefix: &[f64], order: Order) -> Vec<(f64, f64)> {
    let (plain, graded) = order.points();
    let len = b - a;
    // nearest singular point at or beyond each end, and interior crossings
    let mut left: Option<Spot> = None;
    let mut right: Option<Spot> = None;
    let mut interior: Vec<Spot> = Vec::new();
    let snap = 1e-14 * len;
    for p in planes {
        let t = p.crossing(prefix);
        if !t.is_finite() || t < a - len || t > b + len {
            continue;
        }
        let width = p.width / p.normal[p.level].abs();
        if width >= len {
            // analytic over the whole segment
            continue;
        }
        let spot = Spot { t, k: p.grading(), width };
        if t <= a + snap {
            let spot = Spot { t: t.min(a), ..spot };
            if left.is_none_or(|u| spot.t > u.t) {
                left = Some(spot);
            }
        } else if t >= b - snap {
            let spot = Spot { t: t.max(b), ..spot };
            if right.is_none_or(|u| spot.t < u.t) {
                right = Some(spot);
            }
        } else {
            interior.push(spot);
        }
    }
    if left.is_none() && right.is_none() && interior.is_empty() {
        return GaussRule::cached(plain).on(a, b).collect();
    }
    interior.sort_by(|x, y| x.t.total_cmp(&y.t));
    interior.dedup_by(|next, prev| {
        let same = next.t - prev.t <= snap;
        if same {
            prev.k = prev.k.max(next.k);
            prev.width = prev.width.min(next.width);
        }
        same
    });
    // piece boundaries with the singular point governing each boundary
    let mut breaks: Vec<(f64, Option<Spot>)> = vec![(a, left)];
    breaks.extend(interior.iter().map(|&s| (s.t, Some(s))));
    breaks.push((b, right));
    let rule = GaussRule::cached(graded);
    let mut out = Vec::new();
    for w in breaks.windows(2) {
        let ((p0, s0), (p1, s1)) = (w[0], w[1]);
        match (s0, s1) {
            (None, None) => out.extend(GaussRule::cached(plain).on(p0, p1)),
            (Some(s), None) => graded_piece(rule, s, p0, p1, &mut out),
            (None, Some(s)) => graded_piece(rule, s, p1, p0, &mut out),
            (Some(s0), Some(s1)) => {
                let mid = 0.5 * (p0 + p1);
                graded_piece(rule, s0, p0, mid, &mut out);
                graded_piece(rule, s1, p1, mid, &mut out);
            }
        }
    }
    out
}

/// Largest `u`-interval of the sinh map handled by one Gauss rule; the
/// Jacobian grows like `e^u`.
const SINH_SPAN: f64 = 4.0;

/// Nodes on the segment from `near` to `far`, graded toward the singular
/// point `sing`, which lies at or beyond `near`.
///
/// An exact crossing (`width = 0`) uses `t = sing ± v^k` with `v` running over
/// `[|near - sing|^{1/k}, |far - sing|^{1/k}]`, so that `|t - sing|^{-s}`
/// times the Jacobian is a power of `v`. A peak of positive width `w`, as in
/// `((t - sing)^2 + w^2)^{-s/2}`, uses `t = sing ± w sinh(u)`, under which the
/// factor times the Jacobian is `w^{1-s} cosh(u)^{1-s}`.
fn graded_piece(rule: &GaussRule, spot: Spot, near: f64, far: f64, out: &mut Vec<(f64, f64)>) {
    let Spot { t: sing, k, width } = spot;
    let dir = if far >= near { 1.0 } else { -1.0 };
    if width > 0.0 {
        let u0 = ((near - sing) * dir).max(0.0) / width;
        let u1 = ((far - sing) * dir).max(0.0) / width;
        let (u0, u1) = (u0.asinh(), u1.asinh());
        let pieces = ((u1 - u0) / SINH_SPAN).ceil().max(1.0) as usize;
        let step = (u1 - u0) / pieces as f64;
        for i in 0..pieces {
            let lo = u0 + step * i as f64;
            let hi = if i + 1 == pieces { u1 } else { lo + step };
            for (u, w) in rule.on(lo, hi) {
                out.push((sing + dir * width * u.sinh(), width * u.cosh() * w));
            }
        }
        return;
    }
    let v0 = ((near - sing) * dir).max(0.0).powf(1.0 / k);
    let v1 = ((far - sing) * dir).max(0.0).powf(1.0 / k);
    for (v, w) in rule.on(v0, v1) {
        let mut t = sing + dir * v.powf(k);
        if t == sing {
            // rounded onto the singular point
            t = if dir > 0.0 { sing.next_up() } else { sing.next_down() };
        }
        out.push((t, k * v.powf(k - 1.0) * w));
    }
}
