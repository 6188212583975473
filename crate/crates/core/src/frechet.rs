//! Fréchet distance between 1D curves.
//!
//! Curves are handled through their sample heights with the two `+inf`
//! endpoints replaced by a finite cap
//! `H = max + (max - min) + 1` over the finite heights of both curves.
//! The distance never exceeds `max - min`, so no matching within that bound
//! can pair a capped endpoint with a finite sample.
//!
//! The decision procedure propagates reachable intervals through the
//! free-space grid (rightward and upward only). In one dimension the free
//! space of each cell is convex, so a reachable point on a cell's entry
//! boundary sees every free point on its exit boundary that dominates it.
//!
//! The exact optimum is found among the critical values
//! `{0} ∪ {|p_i - q_j|} ∪ {|p_i - p_k| / 2} ∪ {|q_j - q_l| / 2}`; the
//! half-differences arise when one curve must hold a point between two of
//! the other curve's extrema.

use thiserror::Error;

use crate::curves::Curve1D;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum FrechetError {
    #[error("distance threshold must be non-negative, got {0}")]
    NegativeDelta(f64),
    #[error("distance threshold is NaN")]
    NanDelta,
    #[error("no matching within distance {0}")]
    Infeasible(f64),
}

/// Which curve stands still on the segment ending at a breakpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pause {
    None,
    P,
    Q,
}

/// One breakpoint of a matching: parameters on `P` and `Q` in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchPoint {
    pub p: f64,
    pub q: f64,
    /// Pause on the segment arriving at this breakpoint.
    pub pause: Pause,
}

/// A monotone path through the free space, as matched breakpoints.
/// Pauses stand for strictly increasing reparameterisations of
/// vanishing slope.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    points: Vec<MatchPoint>,
}

impl Matching {
    pub fn points(&self) -> &[MatchPoint] {
        &self.points
    }

    /// `max_t |P(t) - Q(μ(t))|` evaluated on the capped curves. Both curves
    /// are linear between consecutive breakpoints, so breakpoints suffice.
    pub fn cost(&self, p: &Curve1D, q: &Curve1D) -> f64 {
        let (cp, cq) = capped(p.heights(), q.heights());
        let eval = |c: &[f64], x: f64| -> f64 {
            let s = x * (c.len() - 1) as f64;
            let i = (s.floor() as usize).min(c.len() - 2);
            let f = s - i as f64;
            c[i] + f * (c[i + 1] - c[i])
        };
        self.points
            .iter()
            .map(|m| (eval(&cp, m.p) - eval(&cq, m.q)).abs())
            .fold(0.0, f64::max)
    }
}

/// A point of the free-space path in sample-index coordinates, with the
/// capped heights matched there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct PathPoint {
    pub s: f64,
    pub t: f64,
    /// `s` and `t` as (sample index, fraction towards the next sample).
    pub at_p: (usize, f64),
    pub at_q: (usize, f64),
    pub hp: f64,
    pub hq: f64,
}

/// Replaces the infinite endpoints by the common cap.
pub(crate) fn capped(p: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let h = cap_height(p, q);
    let cap = |c: &[f64]| c.iter().map(|&x| if x.is_finite() { x } else { h }).collect();
    (cap(p), cap(q))
}

pub(crate) fn cap_height(p: &[f64], q: &[f64]) -> f64 {
    let (lo, hi) = finite_range(p, q);
    if lo > hi {
        return 1.0;
    }
    hi + (hi - lo) + 1.0
}

fn finite_range(p: &[f64], q: &[f64]) -> (f64, f64) {
    p.iter()
        .chain(q)
        .copied()
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
            (lo.min(x), hi.max(x))
        })
}

type Interval = Option<(f64, f64)>;

/// Parameters `s ∈ [0, 1]` with `|v - (a + s (b - a))| <= d`.
fn free_interval(v: f64, a: f64, b: f64, d: f64) -> Interval {
    if a == b {
        return ((v - a).abs() <= d).then_some((0.0, 1.0));
    }
    let s1 = (v - d - a) / (b - a);
    let s2 = (v + d - a) / (b - a);
    let lo = s1.min(s2).max(0.0);
    let hi = s1.max(s2).min(1.0);
    (lo <= hi).then_some((lo, hi))
}

/// Absolute slack added to every threshold so that critical values computed
/// in floating point are decided as feasible.
fn slack(p: &[f64], q: &[f64]) -> f64 {
    1e-12 * cap_height(p, q).abs().max(1.0)
}

/// Reachable parts of every cell boundary. `left[i][j]` lives on `s = i`,
/// `t ∈ [j, j+1]`; `bottom[i][j]` on `t = j`, `s ∈ [i, i+1]`. Intervals are
/// relative to the boundary segment.
struct Reach {
    n: usize,
    m: usize,
    left: Vec<Interval>,
    bottom: Vec<Interval>,
}

impl Reach {
    fn left(&self, i: usize, j: usize) -> Interval {
        self.left[i * (self.m - 1) + j]
    }

    fn bottom(&self, i: usize, j: usize) -> Interval {
        self.bottom[i * self.m + j]
    }

    fn end_reachable(&self) -> bool {
        let (n, m) = (self.n, self.m);
        self.left(n - 1, m - 2).is_some_and(|iv| iv.1 == 1.0)
            || self.bottom(n - 2, m - 1).is_some_and(|iv| iv.1 == 1.0)
    }
}

/// Reachable part of the first boundary segment along an axis: only a
/// straight run from the origin gets there.
fn axis_start(open: &mut bool, iv: Interval) -> Interval {
    let out = match iv {
        Some((0.0, hi)) if *open => Some((0.0, hi)),
        _ => None,
    };
    *open = out.is_some_and(|iv| iv.1 == 1.0);
    out
}

/// Propagates reachability through cell `(i, j)`: from its left and bottom
/// boundaries to its right and top ones.
#[inline]
fn cell_step(
    p: &[f64],
    q: &[f64],
    i: usize,
    j: usize,
    d: f64,
    from_left: Interval,
    from_bottom: Interval,
) -> (Interval, Interval) {
    if from_left.is_none() && from_bottom.is_none() {
        return (None, None);
    }
    let right = free_interval(p[i + 1], q[j], q[j + 1], d);
    let top = free_interval(q[j + 1], p[i], p[i + 1], d);
    let right = match (from_bottom, from_left) {
        (Some(_), _) => right,
        (None, Some((a, _))) => right.and_then(|(lo, hi)| (lo.max(a) <= hi).then_some((lo.max(a), hi))),
        (None, None) => unreachable!("checked above"),
    };
    let top = match (from_left, from_bottom) {
        (Some(_), _) => top,
        (None, Some((c, _))) => top.and_then(|(lo, hi)| (lo.max(c) <= hi).then_some((lo.max(c), hi))),
        (None, None) => unreachable!("checked above"),
    };
    (right, top)
}

fn reach(p: &[f64], q: &[f64], d: f64) -> Reach {
    let (n, m) = (p.len(), q.len());
    let mut left: Vec<Interval> = vec![None; n * (m - 1)];
    let mut bottom: Vec<Interval> = vec![None; (n - 1) * m];
    let li = |i: usize, j: usize| i * (m - 1) + j;
    let bi = |i: usize, j: usize| i * m + j;
    let mut open = true;
    for j in 0..m - 1 {
        left[li(0, j)] = axis_start(&mut open, free_interval(p[0], q[j], q[j + 1], d));
    }
    let mut open = true;
    for i in 0..n - 1 {
        bottom[bi(i, 0)] = axis_start(&mut open, free_interval(q[0], p[i], p[i + 1], d));
    }
    for i in 0..n - 1 {
        for j in 0..m - 1 {
            let (right, top) = cell_step(p, q, i, j, d, left[li(i, j)], bottom[bi(i, j)]);
            left[li(i + 1, j)] = right;
            bottom[bi(i, j + 1)] = top;
        }
    }
    Reach { n, m, left, bottom }
}

/// Same answer as `reach(..).end_reachable()`, keeping a single column of
/// boundary intervals.
fn end_reachable(p: &[f64], q: &[f64], d: f64) -> bool {
    let (n, m) = (p.len(), q.len());
    let mut open = true;
    let mut left: Vec<Interval> = (0..m - 1)
        .map(|j| axis_start(&mut open, free_interval(p[0], q[j], q[j + 1], d)))
        .collect();
    let mut open_bottom = true;
    let mut bottom = None;
    for i in 0..n - 1 {
        bottom = axis_start(&mut open_bottom, free_interval(q[0], p[i], p[i + 1], d));
        for (j, slot) in left.iter_mut().enumerate() {
            let (right, top) = cell_step(p, q, i, j, d, *slot, bottom);
            *slot = right;
            bottom = top;
        }
        if !open_bottom && left.iter().all(Option::is_none) && bottom.is_none() {
            return false;
        }
    }
    left[m - 2].is_some_and(|iv| iv.1 == 1.0) || bottom.is_some_and(|iv| iv.1 == 1.0)
}

/// Decision on raw sample heights (endpoints `+inf`).
pub(crate) fn decide_heights(p: &[f64], q: &[f64], delta: f64) -> bool {
    let (cp, cq) = capped(p, q);
    end_reachable(&cp, &cq, delta + slack(p, q))
}

fn check_delta(delta: f64) -> Result<(), FrechetError> {
    if delta.is_nan() {
        return Err(FrechetError::NanDelta);
    }
    if delta < 0.0 {
        return Err(FrechetError::NegativeDelta(delta));
    }
    Ok(())
}

/// `d_F(P, Q) <= δ`.
pub fn decide_frechet(p: &Curve1D, q: &Curve1D, delta: f64) -> Result<bool, FrechetError> {
    check_delta(delta)?;
    Ok(decide_heights(p.heights(), q.heights(), delta))
}

/// Candidate critical values not exceeding the finite height range.
fn critical_values(p: &[f64], q: &[f64]) -> Vec<f64> {
    let fp: Vec<f64> = p.iter().copied().filter(|x| x.is_finite()).collect();
    let fq: Vec<f64> = q.iter().copied().filter(|x| x.is_finite()).collect();
    let (lo, hi) = finite_range(p, q);
    let bound = (hi - lo).max(0.0);
    let mut out = vec![0.0];
    let mut push = |x: f64| {
        if x > 0.0 && x <= bound {
            out.push(x);
        }
    };
    for &a in &fp {
        for &b in &fq {
            push((a - b).abs());
        }
    }
    for c in [&fp, &fq] {
        for (i, &a) in c.iter().enumerate() {
            for &b in &c[i + 1..] {
                push(0.5 * (a - b).abs());
            }
        }
    }
    out
}

/// Smallest feasible critical value, by binary search with median selection.
pub(crate) fn frechet_heights(p: &[f64], q: &[f64]) -> f64 {
    let mut cands = critical_values(p, q);
    let mut best = None;
    while !cands.is_empty() {
        let mid = cands.len() / 2;
        let (_, &mut pivot, _) = cands.select_nth_unstable_by(mid, f64::total_cmp);
        if decide_heights(p, q, pivot) {
            best = Some(pivot);
            cands.truncate(mid);
        } else {
            cands.drain(..=mid);
        }
    }
    let (lo, hi) = finite_range(p, q);
    best.unwrap_or((hi - lo).max(0.0))
}

/// Exact distance and a matching that attains it.
pub fn compute_frechet(p: &Curve1D, q: &Curve1D) -> (f64, Matching) {
    let d = frechet_heights(p.heights(), q.heights());
    let m = extract_matching(p, q, d).expect("optimum is feasible");
    (d, m)
}

/// A `δ`-matching, or an error when none exists.
pub fn extract_matching(p: &Curve1D, q: &Curve1D, delta: f64) -> Result<Matching, FrechetError> {
    check_delta(delta)?;
    let path = frechet_path(p.heights(), q.heights(), delta).ok_or(FrechetError::Infeasible(delta))?;
    let (n, m) = ((p.len() - 1) as f64, (q.len() - 1) as f64);
    let mut points = Vec::with_capacity(path.len());
    let mut prev: Option<&PathPoint> = None;
    for pt in &path {
        let pause = match prev {
            Some(pr) if pr.s == pt.s => Pause::P,
            Some(pr) if pr.t == pt.t => Pause::Q,
            _ => Pause::None,
        };
        points.push(MatchPoint {
            p: pt.s / n,
            q: pt.t / m,
            pause,
        });
        prev = Some(pt);
    }
    Ok(Matching { points })
}

/// The `s ∈ [lo, hi]` where `a + s (b - a)` is closest to `v`.
fn closest(v: f64, a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    let s = if a == b { lo } else { (v - a) / (b - a) };
    s.clamp(lo, hi.max(lo))
}

/// Monotone free-space path from `(0, 0)` to `(n-1, m-1)` on raw sample
/// heights. Every path segment stays inside one cell, so consecutive path
/// points bound a piece on which both curves are linear.
pub(crate) fn frechet_path(p: &[f64], q: &[f64], delta: f64) -> Option<Vec<PathPoint>> {
    let (lo, hi) = finite_range(p, q);
    // any feasible threshold may be lowered to the height range
    let delta = if lo <= hi { delta.min(hi - lo) } else { delta };
    let (cp, cq) = capped(p, q);
    // exact threshold first, so the path does not spend the slack
    let mut r = reach(&cp, &cq, delta);
    if !r.end_reachable() {
        r = reach(&cp, &cq, delta + slack(p, q));
        if !r.end_reachable() {
            return None;
        }
    }
    let (n, m) = (cp.len(), cq.len());
    // backtrack from the final corner; (i, j) is the cell whose exit holds
    // z. Coordinates are (index, fraction) pairs so that cell-relative
    // positions are exact.
    type Coord = (usize, f64);
    let canon = |(k, f): Coord| if f == 1.0 { (k + 1, 0.0) } else { (k, f) };
    let mut rev: Vec<(Coord, Coord)> = vec![((n - 1, 0.0), (m - 1, 0.0))];
    let (mut i, mut j) = (n - 2, m - 2);
    loop {
        let ((zi, zf), (zj, zg)) = *rev.last().expect("non-empty");
        if i == 0 && j == 0 {
            rev.push(((0, 0.0), (0, 0.0)));
            break;
        }
        let rel_s = (zi - i) as f64 + zf;
        let rel_t = (zj - j) as f64 + zg;
        let via_left = r.left(i, j).filter(|iv| iv.0 <= rel_t);
        let via_bottom = r.bottom(i, j).filter(|iv| iv.0 <= rel_s);
        if let Some((lo, top)) = via_left.filter(|_| i > 0 || via_bottom.is_none()) {
            let t = closest(cp[i], cq[j], cq[j + 1], lo, rel_t.min(top));
            rev.push(((i, 0.0), canon((j, t))));
            if i == 0 {
                // straight run down the s = 0 boundary
                for k in (0..=j).rev() {
                    rev.push(((0, 0.0), (k, 0.0)));
                }
                break;
            }
            i -= 1;
        } else if let Some((lo, top)) = via_bottom {
            let s = closest(cq[j], cp[i], cp[i + 1], lo, rel_s.min(top));
            rev.push((canon((i, s)), (j, 0.0)));
            if j == 0 {
                for k in (0..=i).rev() {
                    rev.push(((k, 0.0), (0, 0.0)));
                }
                break;
            }
            j -= 1;
        } else {
            unreachable!("exit point of a reachable cell has a dominated entry");
        }
    }
    rev.reverse();
    rev.dedup();
    let eval = |c: &[f64], (k, f): Coord| -> f64 {
        if f == 0.0 {
            c[k]
        } else {
            c[k] + f * (c[k + 1] - c[k])
        }
    };
    Some(
        rev.into_iter()
            .map(|(s, t)| PathPoint {
                s: s.0 as f64 + s.1,
                t: t.0 as f64 + t.1,
                at_p: s,
                at_q: t,
                hp: eval(&cp, s),
                hq: eval(&cq, t),
            })
            .collect(),
    )
}
