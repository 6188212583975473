mod common;

use common::{pair, rng, tree};
use mitree::curves::{classify_curve, contract_violating, CurveClass, TraceStep};
use mitree::frechet::compute_frechet;
use mitree::interleaving::monotone_interleaving_distance;
use mitree::synth::HeightStyle;
use mitree::{in_order_walk, Curve1D, CurveTrace, OrderedMergeTree};
use proptest::prelude::*;
use rand::Rng;

/// The curve read straight off the leaf order: leaves alternate with the
/// merge heights of neighbouring leaves, between two infinite ends.
fn expected_heights(t: &OrderedMergeTree) -> Vec<f64> {
    let tr = t.tree();
    let leaves = t.leaf_order().as_slice();
    let mut out = vec![f64::INFINITY, tr.height(leaves[0])];
    for w in leaves.windows(2) {
        out.push(tr.height(tr.lca_vertex(w[0], w[1])));
        out.push(tr.height(w[1]));
    }
    out.push(f64::INFINITY);
    out
}

#[test]
fn single_leaf_curve() {
    let mut b = mitree::MergeTree::builder();
    let u = b.leaf("u", 2.5);
    b.root(u).unwrap();
    let t = OrderedMergeTree::from_tree(b.build().unwrap()).unwrap();
    let (_, curve) = in_order_walk(&t);
    assert_eq!(curve.heights(), [f64::INFINITY, 2.5, f64::INFINITY]);
}

#[test]
fn canonical_form_drops_monotone_interior_samples() {
    let c = Curve1D::new(vec![
        f64::INFINITY,
        4.0,
        3.0,
        0.0,
        0.0,
        2.0,
        3.0,
        1.0,
        f64::INFINITY,
    ])
    .unwrap();
    assert_eq!(c.heights(), [f64::INFINITY, 0.0, 3.0, 1.0, f64::INFINITY]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn curve_extrema_are_leaves_and_merges(seed in any::<u64>()) {
        let t = tree(seed, 14, HeightStyle::Continuous);
        let (_, curve) = in_order_walk(&t);
        let expected = expected_heights(&t);
        prop_assert_eq!(curve.heights(), expected.as_slice());
    }

    #[test]
    fn merge_vertices_appear_once_per_gap_between_children(seed in any::<u64>()) {
        let t = tree(seed, 14, HeightStyle::Dyadic);
        let tr = t.tree();
        let leaves = t.leaf_order().as_slice();
        let mut seen = vec![0usize; tr.len()];
        for w in leaves.windows(2) {
            seen[tr.lca_vertex(w[0], w[1]).index()] += 1;
        }
        for v in tr.vertices().filter(|&v| !tr.is_leaf(v) && tr.parent(v).is_some()) {
            prop_assert_eq!(seen[v.index()], tr.children(v).len() - 1);
        }
    }

    #[test]
    fn refining_the_walk_leaves_the_curve_unchanged(seed in any::<u64>()) {
        let t = tree(seed, 10, HeightStyle::Continuous);
        let (trace, curve) = in_order_walk(&t);
        let mut r = rng(seed);
        let params: Vec<f64> = (0..20).map(|_| r.random::<f64>()).collect();
        let refined = trace.refined_at(t.tree(), &params);
        prop_assert!(refined.len() >= trace.len());
        let again = refined.to_curve().unwrap();
        prop_assert_eq!(again.heights(), curve.heights());
        prop_assert_eq!(compute_frechet(&again, &curve).0, 0.0);
    }

    #[test]
    fn walk_between_two_points_stays_below_their_lca(seed in any::<u64>()) {
        let t = tree(seed, 7, HeightStyle::Continuous);
        let tr = t.tree();
        let (trace, _) = in_order_walk(&t);
        let grid: Vec<f64> = (1..40).map(|k| k as f64 / 40.0).collect();
        let pts: Vec<_> = trace.refined_at(tr, &grid).points().collect();
        for i in 0..pts.len() {
            for j in i..pts.len() {
                let l = tr.lca(&pts[i], &pts[j]);
                for p in &pts[i..=j] {
                    prop_assert!(tr.is_ancestor(p, &l), "{} not below {}", p, l);
                }
            }
        }
    }

    #[test]
    fn in_order_walks_classify_as_in_order(seed in any::<u64>()) {
        let t = tree(seed, 12, HeightStyle::Dyadic);
        let (trace, _) = in_order_walk(&t);
        prop_assert_eq!(classify_curve(&t, &trace).unwrap(), CurveClass::InOrder);
    }

    #[test]
    fn contracting_an_image_walk_gives_a_partial_curve(seed in any::<u64>()) {
        let (a, b) = pair(seed, 8, HeightStyle::Dyadic);
        let cert = monotone_interleaving_distance(&a, &b);
        let (walk, _) = in_order_walk(&a);
        let walk = walk.refined_at_vertices(a.tree());
        let crit = b.tree().critical_heights();
        let params: Vec<f64> = walk
            .steps()
            .windows(2)
            .flat_map(|w| {
                let (ha, hb) = (w[0].point.height(), w[1].point.height());
                let (lo, hi) = (ha.min(hb), ha.max(hb));
                crit.iter()
                    .map(|h| h - cert.delta)
                    .filter(move |&h| lo < h && h < hi && hi.is_finite())
                    .map(move |h| w[0].param + (h - ha) / (hb - ha) * (w[1].param - w[0].param))
            })
            .collect();
        let walk = walk.refined_at(a.tree(), &params);
        let steps = walk
            .steps()
            .iter()
            .map(|s| {
                // every breakpoint of the exact image sits at a half-integer
                // height; undo the interpolation noise of the refinement
                let x = cert.alpha.eval(&a, &b, &s.point).unwrap();
                let point = if x.is_root() { x } else { b.tree().point(x.edge(), (2.0 * x.height()).round() / 2.0).unwrap() };
                TraceStep { param: s.param, point }
            })
            .collect();
        let image = CurveTrace::new(steps).unwrap();
        prop_assert!(classify_curve(&b, &image).unwrap() >= CurveClass::Weak);
        let (contracted, _) = contract_violating(b.tree(), &image);
        prop_assert!(classify_curve(&b, &contracted).unwrap() >= CurveClass::Partial);
    }
}
