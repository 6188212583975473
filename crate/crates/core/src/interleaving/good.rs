//! δ-good maps in both formulations, and the construction of a monotone
//! labelling from a monotone good map.

use std::cmp::Ordering;

use crate::ordering::OrderedMergeTree;
use crate::tree::{MergeTree, TreePoint, VertexId};

use super::{
    approx_eq, check_monotone_tol, check_shift_map, lift, CertificateError, Labelling, ShiftMap, Side,
    Tolerance,
};

/// The two equivalent sets of conditions a good map can be checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GoodVariant {
    /// Order-lifting condition and gap to the lowest image ancestor.
    TW,
    /// Preimage lca spread and depth of non-image points.
    G,
}

/// Lowest image height on every edge of the target; the image of a shift
/// map is the union of the paths from the leaf images up to the root.
struct ImageProfile {
    low: Vec<Option<f64>>,
}

impl ImageProfile {
    fn new(t: &MergeTree, images: &[(VertexId, TreePoint)]) -> ImageProfile {
        let mut low: Vec<Option<f64>> = vec![None; t.len()];
        for (_, p) in images {
            let e = p.edge().index();
            low[e] = Some(low[e].map_or(p.height(), |l| l.min(p.height())));
            let mut v = p.edge();
            while let Some(q) = t.parent(v) {
                if low[q.index()] == Some(t.height(q)) {
                    break;
                }
                low[q.index()] = Some(t.height(q));
                v = q;
            }
        }
        ImageProfile { low }
    }

    /// Lowest ancestor of `y` lying in the image.
    fn lowest_image_ancestor(&self, t: &MergeTree, y: &TreePoint) -> TreePoint {
        let mut e = y.edge();
        let mut h = y.height();
        loop {
            match self.low[e.index()] {
                Some(l) if l <= h => return TreePoint::from_raw(e, h),
                Some(l) => return TreePoint::from_raw(e, l),
                None => {}
            }
            let Some(p) = t.parent(e) else {
                return t.root_point();
            };
            e = p;
            h = t.height(p);
        }
    }
}

/// Heights at which the preimage structure of `α` can change.
fn good_heights(src: &MergeTree, tgt: &MergeTree, delta: f64) -> Vec<f64> {
    let mut extra: Vec<f64> = tgt.critical_heights().iter().map(|h| h - delta).collect();
    extra.extend(src.critical_heights().iter().map(|h| h - 2.0 * delta));
    let lo = src.height_range().0;
    crate::ordering::witness_heights(src, &extra)
        .into_iter()
        .filter(|&h| h >= lo)
        .collect()
}

/// Points of `layer` grouped by equal image.
fn preimage_groups(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    a: &ShiftMap,
    layer: &[TreePoint],
    tol: Tolerance,
) -> Result<Vec<(TreePoint, Vec<TreePoint>)>, CertificateError> {
    let mut groups: Vec<(TreePoint, Vec<TreePoint>)> = Vec::new();
    for x in layer {
        let y = a.eval_tol(src, tgt, x, tol, Side::Alpha)?;
        match groups.iter_mut().find(|(g, _)| approx_eq(tgt.tree(), g, &y, tol)) {
            Some((_, xs)) => xs.push(*x),
            None => groups.push((y, vec![*x])),
        }
    }
    Ok(groups)
}

/// Checks that `a` is a δ-good map under the chosen set of conditions.
pub fn check_good_map(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    a: &ShiftMap,
    variant: GoodVariant,
) -> Result<(), CertificateError> {
    let (s, t) = (src.tree(), tgt.tree());
    let d = a.delta();
    let tol = Tolerance::for_trees(s, t, d);
    check_shift_map(src, tgt, a, Side::Alpha, tol)?;
    let profile = ImageProfile::new(t, a.images());
    match variant {
        GoodVariant::TW => {
            // equal images force equal 2δ-lifts; comparable images then
            // follow by lifting the lower preimage
            for h in good_heights(s, t, d) {
                for (_, xs) in preimage_groups(src, tgt, a, &s.level_set(h), tol)? {
                    let first = lift(s, &xs[0], h + 2.0 * d, tol)?;
                    for x in &xs[1..] {
                        let other = lift(s, x, h + 2.0 * d, tol)?;
                        if !approx_eq(s, &first, &other, tol) {
                            return Err(CertificateError::T2 {
                                first: xs[0],
                                second: *x,
                            });
                        }
                    }
                }
            }
            // the gap is largest at the leaves below each non-image region
            for &w in t.leaves() {
                let y = t.vertex_point(w);
                let yf = profile.lowest_image_ancestor(t, &y);
                let gap = yf.height() - y.height();
                if gap > 2.0 * d + tol.0 {
                    return Err(CertificateError::T3 { point: y, gap });
                }
            }
        }
        GoodVariant::G => {
            for h in good_heights(s, t, d) {
                for (image, xs) in preimage_groups(src, tgt, a, &s.level_set(h), tol)? {
                    let top = xs[1..].iter().fold(xs[0], |acc, x| s.lca(&acc, x));
                    let spread = top.height() - h;
                    if spread > 2.0 * d + tol.0 {
                        return Err(CertificateError::G2 { image, spread });
                    }
                }
            }
            for v in t.vertices().filter(|&v| v != t.root()) {
                let parent = t.parent(v).expect("non-root");
                let top = match profile.low[v.index()] {
                    Some(l) if l > t.height(v) => TreePoint::from_raw(v, l),
                    None if profile.low[parent.index()] == Some(t.height(parent)) => t.vertex_point(parent),
                    _ => continue,
                };
                let depth = top.height() - t.subtree_min_height(v);
                if depth > 2.0 * d + tol.0 {
                    return Err(CertificateError::G3 { root: top, depth });
                }
            }
        }
    }
    Ok(())
}

/// Working data of the second labelling step for one target leaf `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct S2State {
    pub w: VertexId,
    /// Lowest image ancestor of `w`.
    pub w_f: TreePoint,
    /// Leaves below `w_f`, in leaf order.
    pub leaves: Vec<VertexId>,
    /// Position of `w` in `leaves`.
    pub i: usize,
    /// Positions `k` whose lowest image ancestor lies strictly below `w_f`.
    pub s: Vec<usize>,
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    pub h_hat: Option<f64>,
    /// `ŵ_k` and `X_k` for each `k` in `s`.
    pub lifted: Vec<(usize, TreePoint, Vec<TreePoint>)>,
    /// The chosen source point.
    pub x: TreePoint,
}

impl S2State {
    /// `S_i`: positions in `s` before `i`.
    pub fn s_i(&self) -> impl Iterator<Item = usize> + '_ {
        self.s.iter().copied().filter(|&k| k < self.i)
    }
}

/// Replaces `h` by a vertex height of `t` within `tol`, if there is one.
fn snap_height(crit: &[f64], h: f64, tol: Tolerance) -> f64 {
    let k = crit.partition_point(|&c| c < h);
    [k.checked_sub(1), Some(k)]
        .into_iter()
        .flatten()
        .filter_map(|j| crit.get(j).copied())
        .filter(|c| (c - h).abs() <= tol.0)
        .min_by(|a, b| (a - h).abs().total_cmp(&(b - h).abs()))
        .unwrap_or(h)
}

/// Preimage of `y` in the source, in layer order.
fn preimage(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    a: &ShiftMap,
    y: &TreePoint,
    crit: &[f64],
    tol: Tolerance,
) -> Result<Vec<TreePoint>, CertificateError> {
    let h = snap_height(crit, y.height() - a.delta(), tol);
    let mut out = Vec::new();
    for x in src.level_set(h) {
        let img = a.eval_tol(src, tgt, &x, tol, Side::Alpha)?;
        if approx_eq(tgt.tree(), &img, y, tol) {
            out.push(x);
        }
    }
    Ok(out)
}

/// Monotone δ-labelling built from a monotone δ-good map.
pub fn good_to_labelling(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    a: &ShiftMap,
) -> Result<Labelling, CertificateError> {
    good_to_labelling_traced(src, tgt, a).map(|(lab, _)| lab)
}

/// [`good_to_labelling`], also returning the per-leaf state of the second
/// step. The height bound on `ĥ` and the ordering of the `X_k` sets are
/// checked as the construction runs.
pub fn good_to_labelling_traced(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    a: &ShiftMap,
) -> Result<(Labelling, Vec<S2State>), CertificateError> {
    let (s, t) = (src.tree(), tgt.tree());
    let d = a.delta();
    let tol = Tolerance::for_trees(s, t, d);
    check_good_map(src, tgt, a, GoodVariant::TW)?;
    check_monotone_tol(src, tgt, a, Side::Alpha, tol)?;
    let profile = ImageProfile::new(t, a.images());
    let crit = s.critical_heights();

    let mut pi = Vec::new();
    let mut pi_t = Vec::new();
    for &u in s.leaves() {
        pi.push(s.vertex_point(u));
        pi_t.push(a.image_of_leaf(u).expect("checked"));
    }

    let mut states = Vec::new();
    for &w in t.leaves() {
        let w_f = profile.lowest_image_ancestor(t, &t.vertex_point(w));
        let leaves = tgt.leaves_below(&w_f).to_vec();
        let i = leaves.iter().position(|&l| l == w).expect("w lies below w_f");
        let fs: Vec<TreePoint> = leaves
            .iter()
            .map(|&l| profile.lowest_image_ancestor(t, &t.vertex_point(l)))
            .collect();
        let sset: Vec<usize> = (0..leaves.len()).filter(|&k| fs[k] != w_f).collect();
        let xs = preimage(src, tgt, a, &w_f, &crit, tol)?;
        if xs.is_empty() {
            return Err(CertificateError::Construction(format!("{w_f} has no preimage")));
        }
        let mut state = S2State {
            w,
            w_f,
            leaves,
            i,
            s: sset,
            h1: None,
            h2: None,
            h_hat: None,
            lifted: Vec::new(),
            x: xs[0],
        };
        if !state.s.is_empty() {
            fill_lifted(src, tgt, a, &profile, &crit, tol, &fs, &xs, &mut state)?;
        }
        if let Some(i_hat) = state.s_i().last() {
            let (_, _, x_hat) = state
                .lifted
                .iter()
                .find(|(k, _, _)| *k == i_hat)
                .expect("every k in S is lifted");
            state.x = *x_hat
                .last()
                .ok_or_else(|| CertificateError::Construction(format!("X_{i_hat} is empty for leaf {w}")))?;
        }
        pi.push(state.x);
        pi_t.push(t.vertex_point(w));
        states.push(state);
    }
    let lab = Labelling::new(src, tgt, pi, pi_t)?;
    Ok((lab, states))
}

/// Computes `ĥ`, every `ŵ_k` and `X_k`, and checks the ordering of the
/// `X_k`.
#[allow(clippy::too_many_arguments)]
fn fill_lifted(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    a: &ShiftMap,
    profile: &ImageProfile,
    crit: &[f64],
    tol: Tolerance,
    fs: &[TreePoint],
    xs: &[TreePoint],
    state: &mut S2State,
) -> Result<(), CertificateError> {
    let (s, t) = (src.tree(), tgt.tree());
    let top = state.w_f.height();
    let h1 = state
        .s
        .iter()
        .map(|&k| fs[k].height())
        .fold(f64::NEG_INFINITY, f64::max);
    let h2 = a
        .images()
        .iter()
        .map(|(_, p)| p)
        .filter(|p| **p != state.w_f && t.is_ancestor(p, &state.w_f))
        .map(|p| p.height())
        .fold(f64::NEG_INFINITY, f64::max);
    let h_hat = h1.max(h2);
    state.h1 = Some(h1);
    state.h2 = (h2 > f64::NEG_INFINITY).then_some(h2);
    state.h_hat = Some(h_hat);
    if !(h_hat < top) {
        return Err(CertificateError::Construction(format!(
            "ĥ = {h_hat} is not below f'(w^F) = {top} for leaf {}",
            state.w
        )));
    }
    let level = snap_height(crit, top - a.delta(), tol);
    for &k in &state.s {
        let w_hat = t.ancestor_at(&t.vertex_point(state.leaves[k]), h_hat)?;
        debug_assert!(profile.lowest_image_ancestor(t, &w_hat) == w_hat);
        let mut x_k: Vec<TreePoint> = Vec::new();
        for p in preimage(src, tgt, a, &w_hat, crit, tol)? {
            let up = lift(s, &p, level, tol)?;
            if let Some(x) = xs.iter().find(|x| approx_eq(s, x, &up, tol)) {
                if !x_k.contains(x) {
                    x_k.push(*x);
                }
            }
        }
        x_k.sort_by(|p, q| src.compare_points(p, q));
        state.lifted.push((k, w_hat, x_k));
    }
    for (n, (i, wi, xi)) in state.lifted.iter().enumerate() {
        for (j, wj, xj) in &state.lifted[n + 1..] {
            if wi == wj {
                continue;
            }
            if let (Some(last), Some(first)) = (xi.last(), xj.first()) {
                if src.compare_points(last, first) == Ordering::Greater {
                    return Err(CertificateError::Construction(format!(
                        "X_{i} lies after X_{j} for leaf {}",
                        state.w
                    )));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::{check_monotone_labelling, label_distance};
    use super::*;
    use crate::tree::TreeBuilder;

    #[test]
    fn identity_map_is_good() {
        let t = tree_a();
        let id = ShiftMap::identity(&t);
        check_good_map(&t, &t, &id, GoodVariant::TW).unwrap();
        check_good_map(&t, &t, &id, GoodVariant::G).unwrap();
        let lab = good_to_labelling(&t, &t, &id).unwrap();
        assert_eq!(lab.len(), 4);
        assert_eq!(
            label_distance(&lab.matrix_src(&t), &lab.matrix_tgt(&t)).unwrap(),
            0.0
        );
    }

    /// A map that skips a deep branch of the target.
    #[test]
    fn deep_unvisited_branch() {
        let t = tree_a();
        let mut b = TreeBuilder::new();
        let w1 = b.leaf("w1", 1.0);
        let w2 = b.leaf("w2", 2.0);
        let deep = b.leaf("deep", -5.0);
        let v = b.merge("v'", 3.0, &[w1, w2]).unwrap();
        let top = b.merge("top", 4.5, &[v, deep]).unwrap();
        b.root(top).unwrap();
        let tgt = OrderedMergeTree::from_tree(b.build().unwrap()).unwrap();
        let tr = t.tree();
        let tt = tgt.tree();
        let alpha = ShiftMap::new(
            1.0,
            [
                (tr.find("u1").unwrap(), tt.vertex_point(w1)),
                (tr.find("u2").unwrap(), tt.vertex_point(w2)),
            ],
        );
        assert!(matches!(
            check_good_map(&t, &tgt, &alpha, GoodVariant::G),
            Err(CertificateError::G3 { .. })
        ));
        assert!(matches!(
            check_good_map(&t, &tgt, &alpha, GoodVariant::TW),
            Err(CertificateError::T3 { .. })
        ));
    }

    #[test]
    fn tree_a_b_labelling() {
        let (a, b) = (tree_a(), tree_b());
        let (ta, tb) = (a.tree(), b.tree());
        let alpha = ShiftMap::new(
            1.0,
            [
                (
                    ta.find("u1").unwrap(),
                    tb.point(tb.find("w1").unwrap(), 1.0).unwrap(),
                ),
                (
                    ta.find("u2").unwrap(),
                    tb.point(tb.find("w2").unwrap(), 2.0).unwrap(),
                ),
            ],
        );
        for v in [GoodVariant::TW, GoodVariant::G] {
            check_good_map(&a, &b, &alpha, v).unwrap();
        }
        let (lab, states) = good_to_labelling_traced(&a, &b, &alpha).unwrap();
        check_monotone_labelling(&a, &b, &lab).unwrap();
        let d = label_distance(&lab.matrix_src(&a), &lab.matrix_tgt(&b)).unwrap();
        assert!(d <= 1.0, "label distance {d}");
        for st in &states {
            if let Some(h) = st.h_hat {
                assert!(h < st.w_f.height());
            }
        }
    }
}
