//! Conversions between δ-matched in-order curves and monotone interleavings.

use crate::curves::{
    classify_curve, contract_steps, in_order_points, lowest_visits, matched_cost, segment_fraction,
    violating_subcurves, CurveClass, CurveTrace, TraceStep,
};
use crate::ordering::OrderedMergeTree;
use crate::tree::{MergeTree, TreePoint, VertexId};

use super::{check_monotone_interleaving, lift, CertificateError, ShiftMap, Side, Tolerance};

/// Worst breakpoint of a common-parameter pair, or an error if the
/// parameters differ.
fn worst_breakpoint(a: &CurveTrace, b: &CurveTrace) -> Result<(usize, f64), CertificateError> {
    matched_cost(a, b)?;
    Ok(a.points()
        .zip(b.points())
        .map(|(p, q)| match (p.is_root(), q.is_root()) {
            (true, true) => 0.0,
            (false, false) => (p.height() - q.height()).abs(),
            _ => f64::INFINITY,
        })
        .enumerate()
        .fold((0, 0.0), |best, (k, c)| if c > best.1 { (k, c) } else { best }))
}

/// Leaf images read off one side of a matched pair: each leaf is sent to
/// the ancestor, `δ` above it, of the partner point at its first visit.
fn images_from_visits(
    src: &MergeTree,
    tgt: &MergeTree,
    mine: &CurveTrace,
    other: &CurveTrace,
    delta: f64,
    tol: Tolerance,
) -> Result<Vec<(VertexId, TreePoint)>, CertificateError> {
    let mine: Vec<TreePoint> = mine.points().collect();
    let other: Vec<TreePoint> = other.points().collect();
    src.leaves()
        .iter()
        .map(|&u| {
            let at = src.vertex_point(u);
            let k = mine
                .iter()
                .position(|p| *p == at)
                .ok_or(CertificateError::Unvisited(u))?;
            Ok((u, lift(tgt, &other[k], src.height(u) + delta, tol)?))
        })
        .collect()
}

/// The interleaving induced by a δ-matched pair of in-order traces.
pub fn matching_to_interleaving(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    trace: &CurveTrace,
    trace_tgt: &CurveTrace,
    delta: f64,
) -> Result<(ShiftMap, ShiftMap), CertificateError> {
    if delta.is_nan() || delta < 0.0 {
        return Err(CertificateError::BadDelta(delta));
    }
    let (s, t) = (src.tree(), tgt.tree());
    let tol = Tolerance::for_trees(s, t, delta);
    let (index, cost) = worst_breakpoint(trace, trace_tgt)?;
    if cost > delta + tol.0 {
        return Err(CertificateError::NotMatched { index, cost });
    }
    let alpha = images_from_visits(s, t, trace, trace_tgt, delta, tol)?;
    let beta = images_from_visits(t, s, trace_tgt, trace, delta, tol)?;
    Ok((ShiftMap::new(delta, alpha), ShiftMap::new(delta, beta)))
}

/// Refines both traces of a matched pair at every parameter where either
/// crosses a vertex height of its tree.
fn common_refinement(
    s: &MergeTree,
    t: &MergeTree,
    a: &CurveTrace,
    b: &CurveTrace,
) -> (CurveTrace, CurveTrace) {
    let params: Vec<f64> = a
        .refined_at_vertices(s)
        .params()
        .chain(b.refined_at_vertices(t).params())
        .collect();
    (a.refined_at(s, &params), b.refined_at(t, &params))
}

/// Checks that every visit of every breakpoint of `trace` yields the same
/// image: `an(τ'(t), f(τ(t)) + δ)` does not depend on the visit time `t`.
pub fn alpha_is_well_defined(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    trace: &CurveTrace,
    trace_tgt: &CurveTrace,
    delta: f64,
) -> Result<(), CertificateError> {
    let (s, t) = (src.tree(), tgt.tree());
    let tol = Tolerance::for_trees(s, t, delta);
    let (a, b) = common_refinement(s, t, trace, trace_tgt);
    let mut seen: Vec<(TreePoint, TreePoint)> = Vec::new();
    for (x, y) in a.points().zip(b.points()) {
        let img = lift(t, &y, x.height() + delta, tol)?;
        match seen.iter().find(|(p, _)| *p == x) {
            Some((_, first)) if !super::approx_eq(t, first, &img, tol) => {
                return Err(CertificateError::Construction(format!(
                    "visits of {x} disagree: {first} vs {img}"
                )));
            }
            Some(_) => {}
            None => seen.push((x, img)),
        }
    }
    Ok(())
}

/// Moves `p` onto a vertex when it lies within `tol` of one.
fn snap(t: &MergeTree, p: TreePoint, tol: Tolerance) -> TreePoint {
    if p.is_root() || t.as_vertex(&p).is_some() {
        return p;
    }
    if p.height() - t.height(p.edge()) <= tol.0 {
        return t.vertex_point(p.edge());
    }
    match t.parent(p.edge()) {
        Some(q) if t.height(q) - p.height() <= tol.0 => t.vertex_point(q),
        _ => p,
    }
}

/// In-order walk of the subtree below `v`, from `v` back to `v`.
fn walk_below(t: &MergeTree, v: VertexId) -> Vec<TreePoint> {
    let mut out = vec![t.vertex_point(v)];
    let mut stack = vec![(v, 0usize)];
    while let Some((w, i)) = stack.pop() {
        if let Some(&c) = t.children(w).get(i) {
            stack.push((w, i + 1));
            out.push(t.vertex_point(c));
            stack.push((c, 0));
        } else if let Some(&(p, _)) = stack.last() {
            out.push(t.vertex_point(p));
        }
    }
    out
}

/// An unvisited planted subtree hanging below `top`, with its highest
/// vertex `v`.
struct Planted {
    top: TreePoint,
    v: VertexId,
}

fn unvisited_planted(t: &MergeTree, low: &[Option<f64>]) -> Vec<Planted> {
    let mut out = Vec::new();
    for v in t.vertices().filter(|&v| v != t.root()) {
        let parent = t.parent(v).expect("non-root");
        match low[v.index()] {
            Some(h) if h > t.height(v) => out.push(Planted {
                top: TreePoint::from_raw(v, h),
                v,
            }),
            None if low[parent.index()] == Some(t.height(parent)) => out.push(Planted {
                top: t.vertex_point(parent),
                v,
            }),
            _ => {}
        }
    }
    out
}

/// Breakpoint index at which the excursion into `pl` is spliced: the start
/// of the run of visits to `pl.top` that precedes the next visited sibling,
/// or of the last run.
fn splice_index(
    tgt: &OrderedMergeTree,
    points: &[TreePoint],
    low: &[Option<f64>],
    pl: &Planted,
) -> Option<usize> {
    let t = tgt.tree();
    let runs: Vec<usize> = (0..points.len())
        .filter(|&k| points[k] == pl.top && (k == 0 || points[k - 1] != pl.top))
        .collect();
    let last = runs.last().copied()?;
    let Some(p) = t.as_vertex(&pl.top) else {
        return runs.first().copied();
    };
    let lo = tgt.block(pl.v).0;
    let next = t
        .children(p)
        .iter()
        .filter(|c| low[c.index()].is_some() && tgt.block(**c).0 > lo)
        .min_by_key(|c| tgt.block(**c).0);
    let Some(&next) = next else {
        return Some(last);
    };
    let enter = (1..points.len())
        .find(|&k| points[k - 1] == pl.top && points[k].edge() == next && !points[k].is_root())?;
    runs.into_iter().rfind(|&r| r < enter)
}

/// A δ-matched pair of in-order traces built from a monotone interleaving.
///
/// `α ∘ τ` is refined at the target's vertex heights, violating subcurves
/// are contracted, and every unvisited planted subtree is spliced in while
/// the source walk pauses.
pub fn interleaving_to_matching(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    alpha: &ShiftMap,
    beta: &ShiftMap,
) -> Result<(CurveTrace, CurveTrace), CertificateError> {
    check_monotone_interleaving(src, tgt, alpha, beta)?;
    let (s, t) = (src.tree(), tgt.tree());
    let delta = alpha.delta();
    let tol = Tolerance::for_trees(s, t, delta);

    // τ refined so that α∘τ meets target vertices only at breakpoints
    let walk = CurveTrace::uniform(in_order_points(s))?;
    let crit = t.critical_heights();
    let mut params = Vec::new();
    for w in walk.steps().windows(2) {
        let (ha, hb) = (w[0].point.height(), w[1].point.height());
        let (lo, hi) = (ha.min(hb) + delta, ha.max(hb) + delta);
        for &h in crit.iter().filter(|&&h| lo < h && h < hi) {
            let f = segment_fraction(ha, hb, h - delta);
            params.push(w[0].param + f * (w[1].param - w[0].param));
        }
    }
    let walk = walk.refined_at(s, &params);
    let image = |x: &TreePoint| -> Result<TreePoint, CertificateError> {
        Ok(snap(t, alpha.eval_tol(src, tgt, x, tol, Side::Alpha)?, tol))
    };
    let steps0 = walk
        .steps()
        .iter()
        .map(|st| {
            Ok(TraceStep {
                param: st.param,
                point: image(&st.point)?,
            })
        })
        .collect::<Result<Vec<_>, CertificateError>>()?;
    let tau0 = CurveTrace::new(steps0)?;

    // contract violating subcurves of α∘τ
    let intervals = violating_subcurves(t, &tau0);
    let cuts: Vec<f64> = intervals.iter().flat_map(|&(l, r, _)| [l, r]).collect();
    let walk = walk.refined_at(s, &cuts);
    let tau0 = tau0.refined_at(t, &cuts);
    let tau1 = contract_steps(tau0.steps(), &intervals);
    let tau1_trace = CurveTrace::new(tau1.clone())?;

    // splice unvisited planted subtrees
    let low = lowest_visits(t, &tau1_trace);
    let points1: Vec<TreePoint> = tau1.iter().map(|st| st.point).collect();
    let mut inserts: Vec<(usize, usize, Vec<TreePoint>)> = Vec::new();
    for pl in unvisited_planted(t, &low) {
        let at = splice_index(tgt, &points1, &low, &pl)
            .ok_or_else(|| CertificateError::Construction(format!("no visit of {} to splice at", pl.top)))?;
        let mut excursion = walk_below(t, pl.v);
        excursion.push(pl.top);
        inserts.push((at, tgt.block(pl.v).0, excursion));
    }
    inserts.sort_by_key(|(at, lo, _)| (*at, *lo));

    let src_points: Vec<TreePoint> = walk.points().collect();
    let mut a = Vec::with_capacity(src_points.len());
    let mut b = Vec::with_capacity(src_points.len());
    let mut pending = inserts.into_iter().peekable();
    for k in 0..src_points.len() {
        a.push(src_points[k]);
        b.push(points1[k]);
        while let Some((_, _, exc)) = pending.next_if(|(at, _, _)| *at == k) {
            for w in exc {
                a.push(src_points[k]);
                b.push(w);
            }
        }
    }
    let a = CurveTrace::uniform(a)?;
    let b = CurveTrace::uniform(b)?;

    let (index, cost) = worst_breakpoint(&a, &b)?;
    if cost > delta + tol.0 {
        return Err(CertificateError::NotMatched { index, cost });
    }
    for (tree, trace, name) in [(src, &a, "source"), (tgt, &b, "target")] {
        let class = classify_curve(tree, trace)?;
        if class != CurveClass::InOrder {
            return Err(CertificateError::Construction(format!(
                "{name} curve is {class:?}, not in-order"
            )));
        }
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::{check_interleaving, check_monotone};
    use super::*;
    use crate::curves::in_order_walk;

    #[test]
    fn identity_pair_from_identical_walks() {
        let t = tree_a();
        let (w, _) = in_order_walk(&t);
        let (a, b) = matching_to_interleaving(&t, &t, &w, &w, 0.0).unwrap();
        assert_eq!(a, ShiftMap::identity(&t));
        assert_eq!(b, ShiftMap::identity(&t));
        let (x, y) = interleaving_to_matching(&t, &t, &a, &b).unwrap();
        assert_eq!(matched_cost(&x, &y).unwrap(), 0.0);
    }

    #[test]
    fn unmatched_traces_are_rejected() {
        let (a, b) = (tree_a(), tree_b());
        let (wa, _) = in_order_walk(&a);
        let (wb, _) = in_order_walk(&b);
        let err = matching_to_interleaving(&a, &b, &wa, &wb, 0.5).unwrap_err();
        assert!(matches!(err, CertificateError::NotMatched { cost, .. } if cost == 1.0));
    }

    #[test]
    fn tree_a_b_round_trip() {
        let (a, b) = (tree_a(), tree_b());
        let (wa, _) = in_order_walk(&a);
        let (wb, _) = in_order_walk(&b);
        // the two walks are 1-matched breakpoint by breakpoint
        let (alpha, beta) = matching_to_interleaving(&a, &b, &wa, &wb, 1.0).unwrap();
        check_interleaving(&a, &b, &alpha, &beta).unwrap();
        check_monotone(&a, &b, &alpha).unwrap();
        check_monotone(&b, &a, &beta).unwrap();
        alpha_is_well_defined(&a, &b, &wa, &wb, 1.0).unwrap();
        let (x, y) = interleaving_to_matching(&a, &b, &alpha, &beta).unwrap();
        assert!((matched_cost(&x, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subtree_walk() {
        let t = tree_a();
        let tr = t.tree();
        let v = tr.find("v").unwrap();
        let hs: Vec<f64> = walk_below(tr, v).iter().map(|p| p.height()).collect();
        assert_eq!(hs, vec![3.0, 0.0, 3.0, 1.0, 3.0]);
    }
}
