//! Random ordered merge trees for tests, benchmarks and the CLI.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::ordering::OrderedMergeTree;
use crate::tree::{MergeTree, TreeBuilder, VertexId};

/// How heights are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeightStyle {
    /// Real heights rescaled into `[0, 1]`.
    Continuous,
    /// Small integers, so equal heights occur across branches.
    Dyadic,
}

/// A random ordered merge tree with `leaves` leaves.
///
/// Adjacent subtrees are merged two or three at a time until one remains,
/// so every internal vertex has at least two children.
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, leaves: usize, style: HeightStyle) -> OrderedMergeTree {
    assert!(leaves > 0, "a tree needs a leaf");
    let draw_leaf = |rng: &mut R| match style {
        HeightStyle::Continuous => rng.random::<f64>(),
        HeightStyle::Dyadic => f64::from(rng.random_range(0..4u8)),
    };
    let draw_gap = |rng: &mut R| match style {
        HeightStyle::Continuous => 0.05 + rng.random::<f64>(),
        HeightStyle::Dyadic => f64::from(rng.random_range(1..4u8)),
    };
    let mut b = TreeBuilder::new();
    let mut front: Vec<(VertexId, f64)> = (0..leaves)
        .map(|i| {
            let h = draw_leaf(rng);
            (b.leaf(format!("l{i}"), h), h)
        })
        .collect();
    let mut next = 0;
    while front.len() > 1 {
        let k = rng.random_range(2..=front.len().min(3));
        let at = rng.random_range(0..=front.len() - k);
        let group: Vec<(VertexId, f64)> = front.drain(at..at + k).collect();
        let top = group.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
        let h = top + draw_gap(rng);
        let ids: Vec<VertexId> = group.iter().map(|g| g.0).collect();
        let v = b.merge(format!("m{next}"), h, &ids).expect("fresh vertices");
        next += 1;
        front.insert(at, (v, h));
    }
    b.root(front[0].0).expect("single top");
    let tree = b.build().expect("heights increase upward");
    let tree = match style {
        HeightStyle::Continuous => rescaled(&tree),
        HeightStyle::Dyadic => tree,
    };
    OrderedMergeTree::from_tree(tree).expect("valid tree")
}

/// Same shape with finite heights mapped affinely onto `[0, 1]`.
fn rescaled(t: &MergeTree) -> MergeTree {
    let (lo, hi) = t.height_range();
    if hi <= lo {
        return t.shifted(-lo);
    }
    let mut b = TreeBuilder::new();
    for v in t.vertices() {
        let h = t.height(v);
        let h = if h.is_finite() { (h - lo) / (hi - lo) } else { h };
        b.add_vertex(t.name(v), h);
    }
    for v in t.vertices() {
        for &c in t.children(v) {
            b.attach(c, v).expect("copy of a valid tree");
        }
    }
    b.build().expect("affine map keeps heights strictly increasing")
}

/// A caterpillar: leaf `i` joins the spine at height `i + 1`; leaf heights
/// are drawn from `[0, 1)`.
pub fn caterpillar<R: Rng + ?Sized>(rng: &mut R, leaves: usize) -> OrderedMergeTree {
    assert!(leaves > 0, "a tree needs a leaf");
    let mut b = TreeBuilder::new();
    let mut spine = b.leaf("l0", rng.random::<f64>());
    for i in 1..leaves {
        let u = b.leaf(format!("l{i}"), rng.random::<f64>());
        let pair = if rng.random::<bool>() {
            [spine, u]
        } else {
            [u, spine]
        };
        spine = b
            .merge(format!("s{i}"), (i + 1) as f64, &pair)
            .expect("fresh vertices");
    }
    b.root(spine).expect("single top");
    OrderedMergeTree::from_tree(b.build().expect("valid caterpillar")).expect("valid tree")
}

/// Same tree with every children list shuffled.
pub fn shuffled<R: Rng + ?Sized>(rng: &mut R, t: &OrderedMergeTree) -> OrderedMergeTree {
    let tree = t.tree();
    let children = tree
        .vertices()
        .map(|v| {
            let mut ch = tree.children(v).to_vec();
            ch.shuffle(rng);
            ch
        })
        .collect();
    OrderedMergeTree::from_tree(tree.with_children(children)).expect("permuted children")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn random_trees_are_valid() {
        let mut rng = StdRng::seed_from_u64(7);
        for n in 1..20 {
            for style in [HeightStyle::Continuous, HeightStyle::Dyadic] {
                let t = random_tree(&mut rng, n, style);
                assert_eq!(t.tree().leaves().len(), n);
                crate::tree::validate_tree(t.tree()).unwrap();
                if style == HeightStyle::Continuous && n > 1 {
                    assert_eq!(t.tree().height_range(), (0.0, 1.0));
                }
            }
        }
    }

    #[test]
    fn caterpillar_shape() {
        let mut rng = StdRng::seed_from_u64(1);
        let t = caterpillar(&mut rng, 10);
        assert_eq!(t.tree().leaves().len(), 10);
        assert_eq!(t.tree().len(), 20);
    }
}
