//! Curves on merge trees and the 1D height curves they induce.
//!
//! A [`CurveTrace`] is a piecewise-monotone curve: between consecutive
//! breakpoints it runs along the monotone tree path joining them, with height
//! linear in the parameter. Segments touching the root use the hyperbolic
//! profile `h(s) = f(b) + (1 - s) / s` so that the height reaches `+inf`
//! exactly at the root.

use thiserror::Error;

use crate::ordering::OrderedMergeTree;
use crate::tree::{MergeTree, TreeError, TreePoint};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum CurveError {
    #[error("curve has fewer than two samples")]
    TooShort,
    #[error("curve must start and end at +inf")]
    NotClosed,
    #[error("sample {0} is not a finite height")]
    BadHeight(usize),
    #[error("parameters must increase strictly from 0 to 1 (breakpoint {0})")]
    BadParams(usize),
    #[error("breakpoints {0} and {next} are not joined by a monotone path", next = .0 + 1)]
    Discontinuous(usize),
    #[error("traces do not share a parameterisation")]
    ParamMismatch,
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// A 1D curve stored as its sequence of extrema; both ends are `+inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve1D {
    heights: Vec<f64>,
}

impl Curve1D {
    /// Builds a curve from samples, dropping repeated and non-extremal
    /// interior samples.
    pub fn new(samples: Vec<f64>) -> Result<Self, CurveError> {
        if samples.len() < 2 {
            return Err(CurveError::TooShort);
        }
        if samples[0] != f64::INFINITY || samples[samples.len() - 1] != f64::INFINITY {
            return Err(CurveError::NotClosed);
        }
        let last = samples.len() - 1;
        if let Some(i) = samples[1..last].iter().position(|h| !h.is_finite()) {
            return Err(CurveError::BadHeight(i + 1));
        }
        let mut hs: Vec<f64> = Vec::with_capacity(samples.len());
        for h in samples {
            if hs.last() == Some(&h) {
                continue;
            }
            if hs.len() >= 2 {
                let (a, b) = (hs[hs.len() - 2], hs[hs.len() - 1]);
                if (a < b && b < h) || (a > b && b > h) {
                    hs.pop();
                }
            }
            hs.push(h);
        }
        if hs.len() == 1 {
            hs.push(f64::INFINITY);
        }
        Ok(Curve1D { heights: hs })
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    /// Uniform parameter of sample `i`.
    pub fn param(&self, i: usize) -> f64 {
        i as f64 / (self.heights.len() - 1) as f64
    }

    /// Finite heights, smallest and largest.
    pub fn finite_range(&self) -> Option<(f64, f64)> {
        let mut it = self.heights.iter().copied().filter(|h| h.is_finite());
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), h| (lo.min(h), hi.max(h))))
    }

    /// Same curve with every finite height shifted by `c`.
    pub fn shifted(&self, c: f64) -> Curve1D {
        Curve1D {
            heights: self.heights.iter().map(|h| h + c).collect(),
        }
    }
}

/// One breakpoint of a [`CurveTrace`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceStep {
    pub param: f64,
    pub point: TreePoint,
}

/// A curve on a merge tree given by breakpoints with parameters in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveTrace {
    steps: Vec<TraceStep>,
}

impl CurveTrace {
    /// Checks that parameters increase strictly from 0 to 1.
    pub fn new(steps: Vec<TraceStep>) -> Result<Self, CurveError> {
        if steps.len() < 2 {
            return Err(CurveError::TooShort);
        }
        if steps[0].param != 0.0 {
            return Err(CurveError::BadParams(0));
        }
        if steps[steps.len() - 1].param != 1.0 {
            return Err(CurveError::BadParams(steps.len() - 1));
        }
        for (i, w) in steps.windows(2).enumerate() {
            if !(w[0].param < w[1].param) {
                return Err(CurveError::BadParams(i + 1));
            }
        }
        Ok(CurveTrace { steps })
    }

    /// Breakpoints at uniformly spaced parameters.
    pub fn uniform(points: Vec<TreePoint>) -> Result<Self, CurveError> {
        let n = points.len();
        if n < 2 {
            return Err(CurveError::TooShort);
        }
        let steps = points
            .into_iter()
            .enumerate()
            .map(|(i, point)| TraceStep {
                param: if i + 1 == n {
                    1.0
                } else {
                    i as f64 / (n - 1) as f64
                },
                point,
            })
            .collect();
        CurveTrace::new(steps)
    }

    pub fn steps(&self) -> &[TraceStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = TreePoint> + '_ {
        self.steps.iter().map(|s| s.point)
    }

    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.param)
    }

    pub fn heights(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.point.height()).collect()
    }

    /// Checks that the curve is closed at the root and that consecutive
    /// breakpoints are comparable.
    pub fn check_continuity(&self, t: &MergeTree) -> Result<(), CurveError> {
        if !self.steps[0].point.is_root() || !self.steps[self.len() - 1].point.is_root() {
            return Err(CurveError::NotClosed);
        }
        for (i, w) in self.steps.windows(2).enumerate() {
            let (a, b) = (&w[0].point, &w[1].point);
            if a.edge().index() >= t.len()
                || b.edge().index() >= t.len()
                || !(t.is_ancestor(a, b) || t.is_ancestor(b, a))
            {
                return Err(CurveError::Discontinuous(i));
            }
        }
        Ok(())
    }

    /// Index `k` of the segment `[t_k, t_{k+1}]` containing `param`.
    fn segment_of(&self, param: f64) -> usize {
        let k = self.steps.partition_point(|s| s.param <= param);
        k.saturating_sub(1).min(self.len() - 2)
    }

    /// The point at parameter `param`.
    pub fn point_at(&self, t: &MergeTree, param: f64) -> TreePoint {
        let k = self.segment_of(param);
        let (a, b) = (&self.steps[k], &self.steps[k + 1]);
        if param <= a.param {
            return a.point;
        }
        if param >= b.param {
            return b.point;
        }
        let s = (param - a.param) / (b.param - a.param);
        let h = segment_height(a.point.height(), b.point.height(), s);
        point_on_path(t, &a.point, &b.point, h)
    }

    /// Inserts breakpoints at `params` (ignored where one already exists).
    pub fn refined_at(&self, t: &MergeTree, params: &[f64]) -> CurveTrace {
        let mut extra: Vec<f64> = params.iter().copied().filter(|p| *p > 0.0 && *p < 1.0).collect();
        extra.sort_by(f64::total_cmp);
        extra.dedup();
        let mut steps = Vec::with_capacity(self.len() + extra.len());
        let mut j = 0;
        for (k, step) in self.steps.iter().enumerate() {
            while j < extra.len() && extra[j] < step.param {
                if k > 0 && extra[j] > self.steps[k - 1].param {
                    steps.push(TraceStep {
                        param: extra[j],
                        point: self.point_at(t, extra[j]),
                    });
                }
                j += 1;
            }
            while j < extra.len() && extra[j] == step.param {
                j += 1;
            }
            steps.push(*step);
        }
        CurveTrace { steps }
    }

    /// Inserts breakpoints wherever a segment crosses a vertex height of `t`
    /// strictly between its endpoints, so that every segment stays on one
    /// closed edge.
    pub fn refined_at_vertices(&self, t: &MergeTree) -> CurveTrace {
        let hs = t.critical_heights();
        let mut params = Vec::new();
        for w in self.steps.windows(2) {
            let (ha, hb) = (w[0].point.height(), w[1].point.height());
            let (lo, hi) = (ha.min(hb), ha.max(hb));
            let from = hs.partition_point(|&h| h <= lo);
            for &h in hs[from..].iter().take_while(|&&h| h < hi) {
                let s = segment_fraction(ha, hb, h);
                params.push(w[0].param + s * (w[1].param - w[0].param));
            }
        }
        self.refined_at(t, &params)
    }

    /// The 1D curve `f ∘ τ`.
    pub fn to_curve(&self) -> Result<Curve1D, CurveError> {
        Curve1D::new(self.heights())
    }
}

/// Height at fraction `s` of a segment from height `a` to height `b`.
pub(crate) fn segment_height(a: f64, b: f64, s: f64) -> f64 {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => a + s * (b - a),
        (false, true) if s > 0.0 => b + (1.0 - s) / s,
        (true, false) if s < 1.0 => a + s / (1.0 - s),
        (false, false) => f64::INFINITY,
        _ => f64::INFINITY,
    }
}

/// Inverse of [`segment_height`] for `h` between the endpoint heights.
pub(crate) fn segment_fraction(a: f64, b: f64, h: f64) -> f64 {
    match (a.is_finite(), b.is_finite()) {
        (true, true) if a != b => ((h - a) / (b - a)).clamp(0.0, 1.0),
        (true, true) => 0.0,
        (false, true) => 1.0 / (1.0 + (h - b)),
        (true, false) => {
            let d = h - a;
            d / (1.0 + d)
        }
        (false, false) => 0.0,
    }
}

/// The point at height `h` on the monotone path joining comparable `a`, `b`.
pub(crate) fn point_on_path(t: &MergeTree, a: &TreePoint, b: &TreePoint, h: f64) -> TreePoint {
    let lower = if a.height() <= b.height() { a } else { b };
    let h = h.max(lower.height());
    t.ancestor_at(lower, h).expect("h not below the lower endpoint")
}

/// In-order walk: depth-first traversal following children in leaf order,
/// returning to each vertex after every child.
pub fn in_order_walk(t: &OrderedMergeTree) -> (CurveTrace, Curve1D) {
    let points = in_order_points(t.tree());
    let trace = CurveTrace::uniform(points).expect("walk has at least three points");
    let curve = trace.to_curve().expect("walk starts and ends at the root");
    (trace, curve)
}

/// Breakpoints of the in-order walk of the subtree at `tree`'s root.
pub(crate) fn in_order_points(t: &MergeTree) -> Vec<TreePoint> {
    let mut out = Vec::with_capacity(2 * t.len());
    // (vertex, next child index)
    let mut stack = vec![(t.root(), 0usize)];
    out.push(t.root_point());
    while let Some((v, i)) = stack.pop() {
        if i < t.children(v).len() {
            stack.push((v, i + 1));
            let c = t.children(v)[i];
            out.push(t.vertex_point(c));
            stack.push((c, 0));
        } else if let Some(&(p, _)) = stack.last() {
            out.push(t.vertex_point(p));
        }
    }
    out
}

/// Curve classes, weakest first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CurveClass {
    None,
    Weak,
    Partial,
    InOrder,
}

/// Largest class the trace belongs to.
pub fn classify_curve(t: &OrderedMergeTree, trace: &CurveTrace) -> Result<CurveClass, CurveError> {
    let tree = t.tree();
    trace.check_continuity(tree)?;
    let trace = trace.refined_at_vertices(tree);
    if !respects_order(t, &trace) {
        return Ok(CurveClass::None);
    }
    let low = lowest_visits(tree, &trace);
    let mut partial = true;
    let mut full = true;
    for x in sample_points(tree, &trace) {
        let visits = count_visits(tree, &trace, &x);
        let deg = tree.down_degree(&x);
        if visits != deg + 1 {
            full = false;
        }
        if visits > 0 && visits + unvisited_degree(tree, &low, &x) != deg + 1 {
            partial = false;
        }
    }
    Ok(match (partial, full) {
        (true, true) => CurveClass::InOrder,
        (true, false) => CurveClass::Partial,
        _ => CurveClass::Weak,
    })
}

/// Order respect: at every sampled height, the points where the curve crosses
/// that height appear in non-decreasing layer order.
fn respects_order(t: &OrderedMergeTree, trace: &CurveTrace) -> bool {
    let tree = t.tree();
    let mut hs: Vec<f64> = trace.heights().into_iter().filter(|h| h.is_finite()).collect();
    hs.extend(tree.critical_heights());
    let hs = crate::ordering::witness_heights(tree, &hs);
    hs.iter().all(|&h| {
        let crossings = crossings_at(tree, trace, h);
        crossings
            .windows(2)
            .all(|w| t.compare_in_layer(&w[0], &w[1]).expect("one layer") != std::cmp::Ordering::Greater)
    })
}

/// Points at height `h` met by the curve, in parameter order.
fn crossings_at(t: &MergeTree, trace: &CurveTrace, h: f64) -> Vec<TreePoint> {
    let mut out = Vec::new();
    for w in trace.steps().windows(2) {
        let (a, b) = (&w[0].point, &w[1].point);
        let (lo, hi) = (a.height().min(b.height()), a.height().max(b.height()));
        if lo <= h && h <= hi {
            out.push(point_on_path(t, a, b, h));
        }
    }
    out
}

/// For each edge (indexed by its lower vertex), the lowest height at which
/// the curve touches it.
pub(crate) fn lowest_visits(t: &MergeTree, trace: &CurveTrace) -> Vec<Option<f64>> {
    let mut low: Vec<Option<f64>> = vec![None; t.len()];
    let mut mark = |e: usize, h: f64| {
        low[e] = Some(low[e].map_or(h, |l: f64| l.min(h)));
    };
    for w in trace.steps().windows(2) {
        let (a, b) = (&w[0].point, &w[1].point);
        let (lower, upper) = if a.height() <= b.height() { (a, b) } else { (b, a) };
        mark(lower.edge().index(), lower.height());
        let mut v = lower.edge();
        while let Some(p) = t.parent(v) {
            if t.height(p) > upper.height() {
                break;
            }
            mark(p.index(), t.height(p));
            v = p;
        }
    }
    low
}

/// Number of unvisited planted subtrees rooted at `x`.
pub(crate) fn unvisited_degree(t: &MergeTree, low: &[Option<f64>], x: &TreePoint) -> usize {
    match t.as_vertex(x) {
        Some(v) => t.children(v).iter().filter(|c| low[c.index()].is_none()).count(),
        None => usize::from(low[x.edge().index()].is_none_or(|l| l >= x.height())),
    }
}

/// Every vertex, plus points on each edge at the breakpoint heights it
/// carries and at midpoints between them. Visit counts are constant between
/// consecutive samples on an edge.
fn sample_points(t: &MergeTree, trace: &CurveTrace) -> Vec<TreePoint> {
    let mut per_edge: Vec<Vec<f64>> = vec![Vec::new(); t.len()];
    for p in trace.points() {
        if !p.is_root() && t.as_vertex(&p).is_none() {
            per_edge[p.edge().index()].push(p.height());
        }
    }
    let top = t.height_range().1;
    let mut out = Vec::new();
    for v in t.vertices() {
        out.push(t.vertex_point(v));
        let Some(parent) = t.parent(v) else { continue };
        let mut hs = std::mem::take(&mut per_edge[v.index()]);
        let upper = if t.height(parent).is_finite() {
            t.height(parent)
        } else {
            hs.iter().copied().fold(top, f64::max) + 1.0
        };
        hs.push(t.height(v));
        hs.push(upper);
        hs.sort_by(f64::total_cmp);
        hs.dedup();
        for w in hs.windows(2) {
            out.push(TreePoint::from_raw(v, 0.5 * (w[0] + w[1])));
            if w[1] < upper {
                out.push(TreePoint::from_raw(v, w[1]));
            }
        }
    }
    out
}

/// Number of connected components of `trace^{-1}(x)`.
pub(crate) fn count_visits(t: &MergeTree, trace: &CurveTrace, x: &TreePoint) -> usize {
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for w in trace.steps().windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let piece = if a.point == *x && b.point == *x {
            Some((a.param, b.param))
        } else if a.point == *x {
            Some((a.param, a.param))
        } else if b.point == *x {
            Some((b.param, b.param))
        } else {
            let (ha, hb) = (a.point.height(), b.point.height());
            let inside = x.height() > ha.min(hb) && x.height() < ha.max(hb);
            (inside && point_on_path(t, &a.point, &b.point, x.height()) == *x).then(|| {
                let s = segment_fraction(ha, hb, x.height());
                let p = a.param + s * (b.param - a.param);
                (p, p)
            })
        };
        if let Some(piece) = piece {
            match pieces.last_mut() {
                Some(last) if piece.0 <= last.1 => last.1 = last.1.max(piece.1),
                _ => pieces.push(piece),
            }
        }
    }
    pieces.len()
}

/// Maximal subcurves `[l, r]` with `σ(l) = σ(r)` that stay strictly above
/// `f(σ(l))` in between, as parameter intervals.
pub fn find_violating_subcurves(t: &MergeTree, trace: &CurveTrace) -> Vec<(f64, f64)> {
    violating_subcurves(t, trace)
        .into_iter()
        .map(|(l, r, _)| (l, r))
        .collect()
}

/// [`find_violating_subcurves`] with the point `σ(l) = σ(r)` of each
/// interval, computed exactly rather than re-interpolated from `l`.
pub(crate) fn violating_subcurves(t: &MergeTree, trace: &CurveTrace) -> Vec<(f64, f64, TreePoint)> {
    let trace = trace.refined_at_vertices(t);
    let steps = trace.steps();
    let n = steps.len();
    let mut found: Vec<(f64, f64, TreePoint)> = Vec::new();
    for k in 0..n {
        let x = steps[k].point;
        if x.is_root() {
            continue;
        }
        let h = x.height();
        // forward: leave x upward, first return to height h
        if k + 1 < n && steps[k + 1].point.height() > h {
            if let Some((r, p)) = first_return(t, steps, k, h, true) {
                if p == x {
                    found.push((steps[k].param, r, x));
                }
            }
        }
        // backward: arrive at x from above, last time at height h before
        if k > 0 && steps[k - 1].point.height() > h {
            if let Some((l, p)) = first_return(t, steps, k, h, false) {
                if p == x {
                    found.push((l, steps[k].param, x));
                }
            }
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    found.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    let mut maximal: Vec<(f64, f64, TreePoint)> = Vec::new();
    for iv in found {
        if maximal.iter().any(|m| m.0 <= iv.0 && iv.1 <= m.1) {
            continue;
        }
        maximal.retain(|m| !(iv.0 <= m.0 && m.1 <= iv.1));
        maximal.push(iv);
    }
    maximal.sort_by(|a, b| a.0.total_cmp(&b.0));
    maximal
}

/// Starting at breakpoint `k` (at height `h`) and walking forward or
/// backward, the first parameter where the curve is back at height `<= h`,
/// together with the point there.
fn first_return(
    t: &MergeTree,
    steps: &[TraceStep],
    k: usize,
    h: f64,
    forward: bool,
) -> Option<(f64, TreePoint)> {
    let idx: Box<dyn Iterator<Item = usize>> = if forward {
        Box::new(k + 1..steps.len())
    } else {
        Box::new((0..k).rev())
    };
    let mut prev = k;
    for j in idx {
        let hj = steps[j].point.height();
        if hj <= h {
            let (a, b) = (&steps[prev], &steps[j]);
            let s = segment_fraction(a.point.height(), b.point.height(), h);
            let param = a.param + s * (b.param - a.param);
            let p = if hj == h {
                b.point
            } else {
                point_on_path(t, &a.point, &b.point, h)
            };
            let param = if hj == h { b.param } else { param };
            return Some((param, p));
        }
        prev = j;
    }
    None
}

/// Replaces every maximal violating subcurve by the constant curve at its
/// left endpoint. Returns the new trace and the contracted intervals.
pub fn contract_violating(t: &MergeTree, trace: &CurveTrace) -> (CurveTrace, Vec<(f64, f64)>) {
    let intervals = violating_subcurves(t, trace);
    let cuts: Vec<f64> = intervals.iter().flat_map(|&(l, r, _)| [l, r]).collect();
    let refined = trace.refined_at(t, &cuts);
    let steps = contract_steps(refined.steps(), &intervals);
    let plain = intervals.into_iter().map(|(l, r, _)| (l, r)).collect();
    (CurveTrace { steps }, plain)
}

/// Sets every breakpoint with parameter in `[l, r]` to the interval's point.
pub(crate) fn contract_steps(steps: &[TraceStep], intervals: &[(f64, f64, TreePoint)]) -> Vec<TraceStep> {
    let mut out = steps.to_vec();
    // touching intervals share their common endpoint, so they collapse onto
    // one anchor; reusing the first keeps rounding noise out of the result
    let mut prev: Option<(f64, TreePoint)> = None;
    for &(l, r, x) in intervals {
        let x = match prev {
            Some((pr, px)) if l <= pr => px,
            _ => x,
        };
        for s in out.iter_mut().filter(|s| s.param >= l && s.param <= r) {
            s.point = x;
        }
        prev = Some((r, x));
    }
    out
}

/// Largest finite-height cost `max_t |f(τ(t)) - f'(τ'(t))|` of two traces on
/// a common parameterisation. Both curves are linear in height between
/// shared breakpoints, so the maximum is attained at a breakpoint.
pub fn matched_cost(a: &CurveTrace, b: &CurveTrace) -> Result<f64, CurveError> {
    if a.len() != b.len() || a.params().zip(b.params()).any(|(x, y)| x != y) {
        return Err(CurveError::ParamMismatch);
    }
    Ok(a.points()
        .zip(b.points())
        .map(|(p, q)| match (p.is_root(), q.is_root()) {
            (true, true) => 0.0,
            (false, false) => (p.height() - q.height()).abs(),
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max))
}
