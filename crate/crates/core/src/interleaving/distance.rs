use crate::curves::{in_order_points, in_order_walk, point_on_path, CurveTrace};
use crate::frechet::{frechet_heights, frechet_path};
use crate::ordering::OrderedMergeTree;
use crate::tree::{MergeTree, TreePoint};

use super::{matching_to_interleaving, ShiftMap};

/// The distance together with an interleaving and the matched walks it
/// was read from.
#[derive(Clone, Debug)]
pub struct DistanceCertificate {
    pub delta: f64,
    pub alpha: ShiftMap,
    pub beta: ShiftMap,
    pub walk_src: CurveTrace,
    pub walk_tgt: CurveTrace,
}

/// Monotone interleaving distance, without a certificate.
pub fn distance_value(src: &OrderedMergeTree, tgt: &OrderedMergeTree) -> f64 {
    let (_, p) = in_order_walk(src);
    let (_, q) = in_order_walk(tgt);
    frechet_heights(p.heights(), q.heights())
}

/// Point of the walk `pts` at sample `k` plus fraction `f`, with capped
/// height `h`.
fn walk_point(t: &MergeTree, pts: &[TreePoint], (k, f): (usize, f64), h: f64) -> TreePoint {
    if f == 0.0 {
        return pts[k];
    }
    let (a, b) = (&pts[k], &pts[k + 1]);
    let lo = a.height().min(b.height());
    let hi = a.height().max(b.height());
    point_on_path(t, a, b, h.clamp(lo, hi))
}

/// The two in-order walks, reparameterised along an optimal matching.
pub fn matched_walks(src: &OrderedMergeTree, tgt: &OrderedMergeTree) -> (f64, CurveTrace, CurveTrace) {
    let (s, t) = (src.tree(), tgt.tree());
    let delta = distance_value(src, tgt);
    let ps = in_order_points(s);
    let qs = in_order_points(t);
    let hp: Vec<f64> = ps.iter().map(TreePoint::height).collect();
    let hq: Vec<f64> = qs.iter().map(TreePoint::height).collect();
    let path = frechet_path(&hp, &hq, delta).expect("the optimum is feasible");
    let (a, b): (Vec<_>, Vec<_>) = path
        .iter()
        .map(|pp| {
            (
                walk_point(s, &ps, pp.at_p, pp.hp),
                walk_point(t, &qs, pp.at_q, pp.hq),
            )
        })
        .unzip();
    let a = CurveTrace::uniform(a).expect("path has both corners");
    let b = CurveTrace::uniform(b).expect("path has both corners");
    (delta, a, b)
}

/// Distance `δ*` and a monotone `δ*`-interleaving attaining it.
pub fn monotone_interleaving_distance(src: &OrderedMergeTree, tgt: &OrderedMergeTree) -> DistanceCertificate {
    let (delta, walk_src, walk_tgt) = matched_walks(src, tgt);
    let (alpha, beta) = matching_to_interleaving(src, tgt, &walk_src, &walk_tgt, delta)
        .expect("an optimal matching induces an interleaving");
    DistanceCertificate {
        delta,
        alpha,
        beta,
        walk_src,
        walk_tgt,
    }
}

#[cfg(test)]
mod tests {
    use super::super::check_monotone_interleaving;
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn tree_a_b_distance_is_one() {
        let (a, b) = (tree_a(), tree_b());
        let cert = monotone_interleaving_distance(&a, &b);
        assert_eq!(cert.delta, 1.0);
        check_monotone_interleaving(&a, &b, &cert.alpha, &cert.beta).unwrap();
    }

    #[test]
    fn self_distance_is_zero() {
        let a = tree_a();
        let cert = monotone_interleaving_distance(&a, &a);
        assert_eq!(cert.delta, 0.0);
        assert_eq!(cert.alpha, ShiftMap::identity(&a));
    }

    #[test]
    fn shifted_tree() {
        let a = tree_a();
        let b = OrderedMergeTree::from_tree(a.tree().shifted(2.0)).unwrap();
        let cert = monotone_interleaving_distance(&a, &b);
        assert_eq!(cert.delta, 2.0);
        check_monotone_interleaving(&a, &b, &cert.alpha, &cert.beta).unwrap();
    }
}
