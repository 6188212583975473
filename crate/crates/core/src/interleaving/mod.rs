//! Monotone interleavings and their two alternative certificate forms.
//!
//! A δ-shift map `α: T → T'` is stored as the images of the leaves of `T`;
//! every other point is mapped by `α(x) = an(α(u), f(x) + δ)` for any leaf
//! `u` below `x`. Trees are passed alongside the map rather than stored in it.
//!
//! Verifiers compare heights with a tolerance of `1e-9` relative to the
//! largest finite height involved, so certificates built from floating-point
//! distances still verify.

mod distance;
mod good;
mod label;
mod matched;

use std::cmp::Ordering;

use thiserror::Error;

use crate::curves::CurveError;
use crate::ordering::OrderedMergeTree;
use crate::tree::{MergeTree, TreeError, TreePoint, VertexId};

pub use distance::{distance_value, matched_walks, monotone_interleaving_distance, DistanceCertificate};
pub use good::{check_good_map, good_to_labelling, good_to_labelling_traced, GoodVariant, S2State};
pub use label::{
    check_monotone_labelling, induced_matrix, label_distance, labelling_to_interleaving, Labelling, Matrix,
};
pub use matched::{alpha_is_well_defined, interleaving_to_matching, matching_to_interleaving};

/// Which of the two maps of an interleaving a witness refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Alpha,
    Beta,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Alpha => "alpha",
            Side::Beta => "beta",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum CertificateError {
    #[error("threshold {0} is negative or NaN")]
    BadDelta(f64),
    #[error("maps use different thresholds {0} and {1}")]
    DeltaMismatch(f64, f64),
    #[error("{side}: leaf {leaf} has no image")]
    MissingImage { side: Side, leaf: VertexId },
    #[error("{side}: image given for {0}, which is not a source leaf", .vertex)]
    UnknownLeaf { side: Side, vertex: VertexId },
    #[error("{side}: image of {leaf} is not a point of the target tree")]
    BadPoint { side: Side, leaf: VertexId },
    #[error("{side}: image of {leaf} sits at height {found}, expected {expected} (C1/C3)")]
    HeightShift {
        side: Side,
        leaf: VertexId,
        expected: f64,
        found: f64,
    },
    #[error("{side}: leaves below {vertex} disagree on its image")]
    Discontinuous { side: Side, vertex: VertexId },
    #[error("{side}: round trip of {point} lands at {found}, expected {expected} (C2/C4)")]
    RoundTrip {
        side: Side,
        point: TreePoint,
        expected: TreePoint,
        found: TreePoint,
    },
    #[error("{side}: order reversed at height {height} between {first} and {second}")]
    NotMonotone {
        side: Side,
        height: f64,
        first: TreePoint,
        second: TreePoint,
    },
    #[error("T2: {first} and {second} share an image but part within 2δ")]
    T2 { first: TreePoint, second: TreePoint },
    #[error("G2: preimage of {image} spreads {spread} above its layer")]
    G2 { image: TreePoint, spread: f64 },
    #[error("T3: {point} lies {gap} below its lowest image ancestor")]
    T3 { point: TreePoint, gap: f64 },
    #[error("G3: unvisited subtree at {root} has depth {depth}")]
    G3 { root: TreePoint, depth: f64 },
    #[error("labelling: {0}")]
    BadLabelling(String),
    #[error("label distance {found} exceeds {delta}")]
    LabelDistance { found: f64, delta: f64 },
    #[error("labels {0} and {1} cross")]
    LabelOrder(usize, usize),
    #[error("traces are not δ-matched: cost {cost} at breakpoint {index}")]
    NotMatched { index: usize, cost: f64 },
    #[error("trace never visits leaf {0}")]
    Unvisited(VertexId),
    #[error("construction invariant failed: {0}")]
    Construction(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Height tolerance used by the verifiers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance(pub f64);

impl Tolerance {
    pub fn for_trees(a: &MergeTree, b: &MergeTree, delta: f64) -> Tolerance {
        let scale = [a.height_range(), b.height_range()]
            .iter()
            .flat_map(|&(lo, hi)| [lo.abs(), hi.abs()])
            .filter(|x| x.is_finite())
            .fold(delta.abs().max(1.0), f64::max);
        Tolerance(1e-9 * scale)
    }
}

/// `x` and `y` coincide up to tolerance: their lca sits at most `tol`
/// above the lower of the two.
pub fn approx_eq(t: &MergeTree, x: &TreePoint, y: &TreePoint, tol: Tolerance) -> bool {
    if x.is_root() || y.is_root() {
        return x.is_root() && y.is_root();
    }
    let z = t.lca(x, y);
    z.height() - x.height().min(y.height()) <= tol.0
}

/// Ancestor of `x` at `h`, accepting `h` up to `tol` below `x`.
pub fn lift(t: &MergeTree, x: &TreePoint, h: f64, tol: Tolerance) -> Result<TreePoint, TreeError> {
    if h < x.height() && x.height() - h <= tol.0 {
        return Ok(*x);
    }
    t.ancestor_at(x, h)
}

/// `⊑` with near-equal points treated as equal.
pub(crate) fn compare_approx(t: &OrderedMergeTree, a: &TreePoint, b: &TreePoint, tol: Tolerance) -> Ordering {
    let h = a.height().max(b.height());
    let tr = t.tree();
    let la = lift(tr, a, h, tol).expect("h above a");
    let lb = lift(tr, b, h, tol).expect("h above b");
    if approx_eq(tr, &la, &lb, tol) {
        Ordering::Equal
    } else {
        t.compare_points(&la, &lb)
    }
}

/// A δ-shift map given by the images of the source leaves.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftMap {
    delta: f64,
    images: Vec<(VertexId, TreePoint)>,
}

impl ShiftMap {
    pub fn new(delta: f64, images: impl IntoIterator<Item = (VertexId, TreePoint)>) -> ShiftMap {
        let mut images: Vec<_> = images.into_iter().collect();
        images.sort_by_key(|(u, _)| *u);
        ShiftMap { delta, images }
    }

    /// The 0-shift identity on `t`.
    pub fn identity(t: &OrderedMergeTree) -> ShiftMap {
        let tr = t.tree();
        ShiftMap::new(0.0, tr.leaves().iter().map(|&u| (u, tr.vertex_point(u))))
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Same images declared with another threshold.
    pub fn with_delta(&self, delta: f64) -> ShiftMap {
        ShiftMap {
            delta,
            images: self.images.clone(),
        }
    }

    pub fn images(&self) -> &[(VertexId, TreePoint)] {
        &self.images
    }

    pub fn image_of_leaf(&self, u: VertexId) -> Option<TreePoint> {
        self.images
            .binary_search_by_key(&u, |(v, _)| *v)
            .ok()
            .map(|i| self.images[i].1)
    }

    /// `α(x)`, through the first leaf below `x`.
    pub fn eval(
        &self,
        src: &OrderedMergeTree,
        tgt: &OrderedMergeTree,
        x: &TreePoint,
    ) -> Result<TreePoint, CertificateError> {
        let tol = Tolerance::for_trees(src.tree(), tgt.tree(), self.delta);
        self.eval_tol(src, tgt, x, tol, Side::Alpha)
    }

    pub(crate) fn eval_tol(
        &self,
        src: &OrderedMergeTree,
        tgt: &OrderedMergeTree,
        x: &TreePoint,
        tol: Tolerance,
        side: Side,
    ) -> Result<TreePoint, CertificateError> {
        if x.is_root() {
            return Ok(tgt.tree().root_point());
        }
        let u = src.first_leaf_below(x);
        let img = self
            .image_of_leaf(u)
            .ok_or(CertificateError::MissingImage { side, leaf: u })?;
        Ok(lift(tgt.tree(), &img, x.height() + self.delta, tol)?)
    }
}

fn check_delta(d: f64) -> Result<(), CertificateError> {
    if d.is_nan() || d < 0.0 {
        return Err(CertificateError::BadDelta(d));
    }
    Ok(())
}

/// Image table complete and well-formed, C1 at the leaves, and images
/// consistent at every vertex.
pub(crate) fn check_shift_map(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    a: &ShiftMap,
    side: Side,
    tol: Tolerance,
) -> Result<(), CertificateError> {
    check_delta(a.delta)?;
    let (s, t) = (src.tree(), tgt.tree());
    for &(u, p) in &a.images {
        if u.index() >= s.len() || !s.is_leaf(u) {
            return Err(CertificateError::UnknownLeaf { side, vertex: u });
        }
        let e = p.edge();
        let canonical = e.index() < t.len()
            && t.height(e) <= p.height()
            && t.parent(e).is_some_and(|q| p.height() < t.height(q));
        if !canonical {
            return Err(CertificateError::BadPoint { side, leaf: u });
        }
    }
    for &u in s.leaves() {
        let img = a
            .image_of_leaf(u)
            .ok_or(CertificateError::MissingImage { side, leaf: u })?;
        let expected = s.height(u) + a.delta;
        if (img.height() - expected).abs() > tol.0 {
            return Err(CertificateError::HeightShift {
                side,
                leaf: u,
                expected,
                found: img.height(),
            });
        }
    }
    // determination: children of each vertex agree on its image
    for v in s.vertices() {
        if s.is_leaf(v) || v == s.root() {
            continue;
        }
        let h = s.height(v) + a.delta;
        let mut first: Option<TreePoint> = None;
        for &c in s.children(v) {
            let img = a.eval_tol(src, tgt, &s.vertex_point(c), tol, side)?;
            let y = lift(t, &img, h, tol)?;
            match first {
                None => first = Some(y),
                Some(f) if approx_eq(t, &f, &y, tol) => {}
                Some(_) => return Err(CertificateError::Discontinuous { side, vertex: v }),
            }
        }
    }
    Ok(())
}

/// Points at which the interleaving conditions are checked: every vertex of
/// `src` and the level sets of `src` at heights `f'(v') - δ`.
fn witness_points(src: &MergeTree, tgt: &MergeTree, delta: f64) -> Vec<TreePoint> {
    let mut pts: Vec<TreePoint> = src
        .vertices()
        .filter(|&v| v != src.root())
        .map(|v| src.vertex_point(v))
        .collect();
    for h in tgt.critical_heights() {
        pts.extend(src.level_set(h - delta));
    }
    pts
}

/// Verifies C1–C4 for `(α, β)`.
pub fn check_interleaving(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    alpha: &ShiftMap,
    beta: &ShiftMap,
) -> Result<(), CertificateError> {
    if alpha.delta != beta.delta {
        return Err(CertificateError::DeltaMismatch(alpha.delta, beta.delta));
    }
    let tol = Tolerance::for_trees(src.tree(), tgt.tree(), alpha.delta);
    check_shift_map(src, tgt, alpha, Side::Alpha, tol)?;
    check_shift_map(tgt, src, beta, Side::Beta, tol)?;
    round_trip(src, tgt, alpha, beta, Side::Alpha, tol)?;
    round_trip(tgt, src, beta, alpha, Side::Beta, tol)
}

fn round_trip(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    there: &ShiftMap,
    back: &ShiftMap,
    side: Side,
    tol: Tolerance,
) -> Result<(), CertificateError> {
    let d = there.delta;
    let other = match side {
        Side::Alpha => Side::Beta,
        Side::Beta => Side::Alpha,
    };
    for x in witness_points(src.tree(), tgt.tree(), d) {
        let y = there.eval_tol(src, tgt, &x, tol, side)?;
        let z = back.eval_tol(tgt, src, &y, tol, other)?;
        let expected = lift(src.tree(), &x, x.height() + 2.0 * d, tol)?;
        if !approx_eq(src.tree(), &z, &expected, tol) {
            return Err(CertificateError::RoundTrip {
                side,
                point: x,
                expected,
                found: z,
            });
        }
    }
    Ok(())
}

/// Heights at which order preservation is checked: vertex heights of the
/// source, target vertex heights shifted down by `δ`, midpoints, and one
/// height above everything.
fn monotone_heights(src: &MergeTree, tgt: &MergeTree, delta: f64) -> Vec<f64> {
    let shifted: Vec<f64> = tgt.critical_heights().iter().map(|h| h - delta).collect();
    let lo = src.height_range().0;
    crate::ordering::witness_heights(src, &shifted)
        .into_iter()
        .filter(|&h| h >= lo)
        .collect()
}

/// Order preservation of `α` on every sampled layer.
pub fn check_monotone(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    a: &ShiftMap,
) -> Result<(), CertificateError> {
    let tol = Tolerance::for_trees(src.tree(), tgt.tree(), a.delta);
    check_shift_map(src, tgt, a, Side::Alpha, tol)?;
    check_monotone_tol(src, tgt, a, Side::Alpha, tol)
}

pub(crate) fn check_monotone_tol(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    a: &ShiftMap,
    side: Side,
    tol: Tolerance,
) -> Result<(), CertificateError> {
    for h in monotone_heights(src.tree(), tgt.tree(), a.delta) {
        let layer = src.level_set(h);
        let images = layer
            .iter()
            .map(|x| a.eval_tol(src, tgt, x, tol, side))
            .collect::<Result<Vec<_>, _>>()?;
        for k in 1..layer.len() {
            if compare_approx(tgt, &images[k - 1], &images[k], tol) == Ordering::Greater {
                return Err(CertificateError::NotMonotone {
                    side,
                    height: h,
                    first: layer[k - 1],
                    second: layer[k],
                });
            }
        }
    }
    Ok(())
}

/// Interleaving conditions plus monotonicity of both maps.
pub fn check_monotone_interleaving(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    alpha: &ShiftMap,
    beta: &ShiftMap,
) -> Result<(), CertificateError> {
    check_interleaving(src, tgt, alpha, beta)?;
    let tol = Tolerance::for_trees(src.tree(), tgt.tree(), alpha.delta);
    check_monotone_tol(src, tgt, alpha, Side::Alpha, tol)?;
    check_monotone_tol(tgt, src, beta, Side::Beta, tol)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::ordering::OrderedMergeTree;
    use crate::tree::TreeBuilder;

    /// Two leaves merging at height 3; `first` and `second` are the leaf
    /// heights in leaf order.
    pub fn cherry(names: [&str; 3], first: f64, second: f64) -> OrderedMergeTree {
        let mut b = TreeBuilder::new();
        let u1 = b.leaf(names[0], first);
        let u2 = b.leaf(names[1], second);
        let v = b.merge(names[2], 3.0, &[u1, u2]).unwrap();
        b.root(v).unwrap();
        OrderedMergeTree::from_tree(b.build().unwrap()).unwrap()
    }

    pub fn tree_a() -> OrderedMergeTree {
        cherry(["u1", "u2", "v"], 0.0, 1.0)
    }

    pub fn tree_b() -> OrderedMergeTree {
        cherry(["w1", "w2", "v'"], 1.0, 0.0)
    }
}
