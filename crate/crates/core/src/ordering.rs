//! Leaf orders, layer orders, and the correspondence between them.
//!
//! An [`OrderedMergeTree`] stores its children lists permuted so that a
//! depth-first walk meets the leaves in the chosen order. Every vertex then
//! owns a contiguous block `[lo, hi)` of leaf ranks, and two distinct points
//! of equal height compare by the start of their blocks.

use std::cmp::Ordering;

use thiserror::Error;

use crate::tree::{validate_tree, MergeTree, TreeError, TreePoint, VertexId};

/// A permutation of the leaves of a tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafOrder(Vec<VertexId>);

impl LeafOrder {
    pub fn new(leaves: Vec<VertexId>) -> Self {
        LeafOrder(leaves)
    }

    pub fn as_slice(&self) -> &[VertexId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<VertexId> {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum OrderingError {
    #[error("leaf order is not a permutation of the leaves")]
    NotPermutation,
    #[error(
        "leaf order splits a subtree: {first} < {middle} < {last} with {middle} outside lca({first}, {last})"
    )]
    NotSeparating {
        first: VertexId,
        middle: VertexId,
        last: VertexId,
    },
    #[error("points at different heights {0} and {1} are not in one layer")]
    HeightMismatch(f64, f64),
    #[error("comparator is not a strict total order on leaves {0} and {1}")]
    InconsistentComparator(VertexId, VertexId),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Checks that `order` is a permutation of the leaves in which every
/// subtree occupies a contiguous block.
pub fn check_leaf_order(t: &MergeTree, order: &LeafOrder) -> Result<(), OrderingError> {
    let mut rank = vec![usize::MAX; t.len()];
    for (i, &u) in order.as_slice().iter().enumerate() {
        if u.index() >= t.len() || !t.is_leaf(u) || rank[u.index()] != usize::MAX {
            return Err(OrderingError::NotPermutation);
        }
        rank[u.index()] = i;
    }
    if order.len() != t.leaves().len() {
        return Err(OrderingError::NotPermutation);
    }
    // Every vertex's leaf ranks must form an interval; report a triple when not.
    for v in t.vertices() {
        let below = t.subtree_leaves(v);
        let (lo, hi) = below
            .iter()
            .map(|u| rank[u.index()])
            .fold((usize::MAX, 0), |(a, b), r| (a.min(r), b.max(r)));
        if hi + 1 - lo != below.len() {
            let first = order.as_slice()[lo];
            let last = order.as_slice()[hi];
            let middle = order.as_slice()[lo..hi]
                .iter()
                .copied()
                .find(|u| !below.contains(u))
                .expect("gap in the block");
            return Err(OrderingError::NotSeparating { first, middle, last });
        }
    }
    Ok(())
}

/// A merge tree together with a separating leaf order.
#[derive(Clone, Debug)]
pub struct OrderedMergeTree {
    tree: MergeTree,
    order: LeafOrder,
    /// `[lo, hi)` leaf-rank block of each vertex.
    block: Vec<(usize, usize)>,
}

impl OrderedMergeTree {
    /// Validates `tree` and `order` and permutes children to match.
    pub fn new(tree: MergeTree, order: LeafOrder) -> Result<Self, OrderingError> {
        validate_tree(&tree).map_err(TreeError::from)?;
        check_leaf_order(&tree, &order)?;
        let mut rank = vec![usize::MAX; tree.len()];
        for (i, &u) in order.as_slice().iter().enumerate() {
            rank[u.index()] = i;
        }
        let min_rank = subtree_fold(&tree, |v| rank[v.index()], usize::min);
        let children = tree
            .vertices()
            .map(|v| {
                let mut ch = tree.children(v).to_vec();
                ch.sort_by_key(|c| min_rank[c.index()]);
                ch
            })
            .collect();
        Ok(Self::from_ordered(tree.with_children(children)))
    }

    /// Uses the stored children order of `tree` as the leaf order.
    pub fn from_tree(tree: MergeTree) -> Result<Self, OrderingError> {
        validate_tree(&tree).map_err(TreeError::from)?;
        Ok(Self::from_ordered(tree))
    }

    fn from_ordered(tree: MergeTree) -> Self {
        let order = LeafOrder(tree.leaves().to_vec());
        let mut rank = vec![usize::MAX; tree.len()];
        for (i, &u) in order.as_slice().iter().enumerate() {
            rank[u.index()] = i;
        }
        let lo = subtree_fold(&tree, |v| rank[v.index()], usize::min);
        let hi = subtree_fold(&tree, |v| rank[v.index()], usize::max);
        let block = lo.into_iter().zip(hi).map(|(a, b)| (a, b + 1)).collect();
        OrderedMergeTree { tree, order, block }
    }

    pub fn tree(&self) -> &MergeTree {
        &self.tree
    }

    pub fn leaf_order(&self) -> &LeafOrder {
        &self.order
    }

    /// Position of leaf `u` in the leaf order.
    pub fn leaf_rank(&self, u: VertexId) -> usize {
        self.block[u.index()].0
    }

    /// Leaf-rank block `[lo, hi)` of the subtree below `v`.
    pub fn block(&self, v: VertexId) -> (usize, usize) {
        self.block[v.index()]
    }

    /// The first leaf below `x` in the leaf order.
    pub fn first_leaf_below(&self, x: &TreePoint) -> VertexId {
        self.order.as_slice()[self.block(x.edge()).0]
    }

    /// Leaves below `x`, in leaf order.
    pub fn leaves_below(&self, x: &TreePoint) -> &[VertexId] {
        let (lo, hi) = self.block(x.edge());
        &self.order.as_slice()[lo..hi]
    }

    /// `<_h` for two points of the same height `h`.
    pub fn compare_in_layer(&self, a: &TreePoint, b: &TreePoint) -> Result<Ordering, OrderingError> {
        if a.height() != b.height() {
            return Err(OrderingError::HeightMismatch(a.height(), b.height()));
        }
        if a == b {
            return Ok(Ordering::Equal);
        }
        Ok(self.block(a.edge()).0.cmp(&self.block(b.edge()).0))
    }

    /// `⊑` extended to points of different heights: compare ancestors at the
    /// higher of the two heights.
    pub fn compare_points(&self, a: &TreePoint, b: &TreePoint) -> Ordering {
        let h = a.height().max(b.height());
        let a = self.tree.ancestor_at(a, h).expect("h is above a");
        let b = self.tree.ancestor_at(b, h).expect("h is above b");
        self.compare_in_layer(&a, &b).expect("same height")
    }

    /// Level set at `h` sorted by `<_h`.
    pub fn level_set(&self, h: f64) -> Vec<TreePoint> {
        // depth-first order of the permuted children is the layer order
        self.tree.level_set(h)
    }
}

/// Post-order fold of a per-leaf value over every subtree.
fn subtree_fold<T: Copy + Default>(
    t: &MergeTree,
    leaf: impl Fn(VertexId) -> T,
    join: impl Fn(T, T) -> T,
) -> Vec<T> {
    let mut out = vec![T::default(); t.len()];
    for v in t.preorder().into_iter().rev() {
        out[v.index()] = if t.is_leaf(v) {
            leaf(v)
        } else {
            t.children(v)
                .iter()
                .map(|c| out[c.index()])
                .reduce(&join)
                .expect("interior vertex has children")
        };
    }
    out
}

/// `<_h` induced by the leaf order of `t`.
pub fn induced_layer_compare(
    t: &OrderedMergeTree,
    a: &TreePoint,
    b: &TreePoint,
) -> Result<Ordering, OrderingError> {
    t.compare_in_layer(a, b)
}

/// Recovers the leaf order encoded by a layer comparator at the bottom layer:
/// leaves compare through their ancestors at the higher of their heights.
pub fn induced_leaf_order<F>(t: &MergeTree, cmp: F) -> Result<LeafOrder, OrderingError>
where
    F: Fn(&TreePoint, &TreePoint) -> Ordering,
{
    let leaf_cmp = |a: &VertexId, b: &VertexId| -> Ordering {
        let pa = t.vertex_point(*a);
        let pb = t.vertex_point(*b);
        let h = pa.height().max(pb.height());
        let xa = t.ancestor_at(&pa, h).expect("h above leaf");
        let xb = t.ancestor_at(&pb, h).expect("h above leaf");
        if a == b {
            Ordering::Equal
        } else {
            cmp(&xa, &xb)
        }
    };
    let leaves = merge_sort(t.leaves().to_vec(), &leaf_cmp);
    for (i, a) in leaves.iter().enumerate() {
        for b in &leaves[i + 1..] {
            if leaf_cmp(a, b) != Ordering::Less || leaf_cmp(b, a) != Ordering::Greater {
                return Err(OrderingError::InconsistentComparator(*a, *b));
            }
        }
    }
    Ok(LeafOrder(leaves))
}

/// Stable merge sort that tolerates inconsistent comparators (the caller
/// re-checks the result).
pub(crate) fn merge_sort<T: Clone>(v: Vec<T>, cmp: &impl Fn(&T, &T) -> Ordering) -> Vec<T> {
    if v.len() <= 1 {
        return v;
    }
    let mut right = v;
    let left = right.drain(..right.len() / 2).collect();
    let left = merge_sort(left, cmp);
    let right = merge_sort(right, cmp);
    let mut out = Vec::with_capacity(left.len() + right.len());
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        if cmp(&right[j], &left[i]) == Ordering::Less {
            out.push(right[j].clone());
            j += 1;
        } else {
            out.push(left[i].clone());
            i += 1;
        }
    }
    out.extend_from_slice(&left[i..]);
    out.extend_from_slice(&right[j..]);
    out
}

/// Why a family of layer comparators is not a layer order.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum LayerWitness {
    #[error("comparator is not a strict total order at height {height} on {a} and {b}")]
    NotTotal { height: f64, a: TreePoint, b: TreePoint },
    #[error("order at {low} disagrees with order at {high} for {a} and {b}")]
    Inconsistent {
        low: f64,
        high: f64,
        a: TreePoint,
        b: TreePoint,
    },
}

/// Checks totality on each sampled layer and consistency between every pair
/// of sampled layers. Vertex heights and midpoints between them are added to
/// `sample_heights`.
pub fn check_layer_consistency<F>(t: &MergeTree, cmp: F, sample_heights: &[f64]) -> Result<(), LayerWitness>
where
    F: Fn(&TreePoint, &TreePoint) -> Ordering,
{
    let heights = witness_heights(t, sample_heights);
    let mut layers = Vec::with_capacity(heights.len());
    for &h in &heights {
        let ls = t.level_set(h);
        let sorted = merge_sort(ls, &cmp);
        for (i, a) in sorted.iter().enumerate() {
            if cmp(a, a) != Ordering::Equal {
                return Err(LayerWitness::NotTotal {
                    height: h,
                    a: *a,
                    b: *a,
                });
            }
            for b in &sorted[i + 1..] {
                if cmp(a, b) != Ordering::Less || cmp(b, a) != Ordering::Greater {
                    return Err(LayerWitness::NotTotal {
                        height: h,
                        a: *a,
                        b: *b,
                    });
                }
            }
        }
        layers.push(sorted);
    }
    for (i, low) in layers.iter().enumerate() {
        for (j, _) in layers.iter().enumerate().skip(i + 1) {
            let high = heights[j];
            let lifted: Vec<TreePoint> = low
                .iter()
                .map(|x| t.ancestor_at(x, high).expect("higher layer"))
                .collect();
            for k in 1..lifted.len() {
                if cmp(&lifted[k - 1], &lifted[k]) == Ordering::Greater {
                    return Err(LayerWitness::Inconsistent {
                        low: heights[i],
                        high,
                        a: low[k - 1],
                        b: low[k],
                    });
                }
            }
        }
    }
    Ok(())
}

/// Sorted sample heights: all finite vertex heights, the extra samples,
/// midpoints between consecutive values, and one height above the top.
pub(crate) fn witness_heights(t: &MergeTree, extra: &[f64]) -> Vec<f64> {
    let mut hs = t.critical_heights();
    hs.extend(extra.iter().copied().filter(|h| h.is_finite()));
    hs.sort_by(f64::total_cmp);
    hs.dedup();
    let mut out = Vec::with_capacity(2 * hs.len() + 1);
    for w in hs.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    if let Some(&last) = hs.last() {
        out.push(last);
        out.push(last + 1.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::TreeBuilder;

    /// ((a b) c) with a@0, b@1 at x@2, c@0.5 joining at y@4.
    fn tree() -> MergeTree {
        let mut bld = TreeBuilder::new();
        let a = bld.leaf("a", 0.0);
        let b = bld.leaf("b", 1.0);
        let x = bld.merge("x", 2.0, &[a, b]).unwrap();
        let c = bld.leaf("c", 0.5);
        let y = bld.merge("y", 4.0, &[x, c]).unwrap();
        bld.root(y).unwrap();
        bld.build().unwrap()
    }

    fn order(t: &MergeTree, names: &[&str]) -> LeafOrder {
        LeafOrder::new(names.iter().map(|n| t.find(n).unwrap()).collect())
    }

    #[test]
    fn separating_orders() {
        let t = tree();
        check_leaf_order(&t, &order(&t, &["c", "b", "a"])).unwrap();
        let err = check_leaf_order(&t, &order(&t, &["a", "c", "b"])).unwrap_err();
        assert!(matches!(err, OrderingError::NotSeparating { middle, .. } if middle == t.find("c").unwrap()));
        assert_eq!(
            check_leaf_order(&t, &order(&t, &["a", "b"])).unwrap_err(),
            OrderingError::NotPermutation
        );
        assert_eq!(
            check_leaf_order(&t, &order(&t, &["a", "b", "b"])).unwrap_err(),
            OrderingError::NotPermutation
        );
    }

    #[test]
    fn reordering_children_follows_leaf_order() {
        let t = tree();
        let omt = OrderedMergeTree::new(t.clone(), order(&t, &["c", "b", "a"])).unwrap();
        let names: Vec<_> = omt.tree().leaves().iter().map(|&u| omt.tree().name(u)).collect();
        assert_eq!(names, ["c", "b", "a"]);
        let ls = omt.level_set(1.5);
        assert_eq!(ls.len(), 3);
        assert_eq!(omt.compare_in_layer(&ls[0], &ls[2]).unwrap(), Ordering::Less);
        assert!(omt
            .compare_in_layer(&ls[0], &t.vertex_point(t.find("x").unwrap()))
            .is_err());
    }

    #[test]
    fn leaf_order_round_trip() {
        let t = tree();
        let omt = OrderedMergeTree::new(t.clone(), order(&t, &["b", "a", "c"])).unwrap();
        let back = induced_leaf_order(&t, |a, b| omt.compare_in_layer(a, b).unwrap()).unwrap();
        assert_eq!(&back, omt.leaf_order());
        check_layer_consistency(&t, |a, b| omt.compare_in_layer(a, b).unwrap(), &[]).unwrap();
    }

    #[test]
    fn inconsistent_layers_are_caught() {
        let t = tree();
        let omt = OrderedMergeTree::new(t.clone(), order(&t, &["a", "b", "c"])).unwrap();
        // flip the order of a and b strictly between heights 1.2 and 2
        let cmp = |p: &TreePoint, q: &TreePoint| {
            let o = omt.compare_in_layer(p, q).unwrap();
            let both_under_x = |r: &TreePoint| r.height() < 2.0 && r.edge() != t.find("c").unwrap();
            if p.height() > 1.2 && both_under_x(p) && both_under_x(q) {
                o.reverse()
            } else {
                o
            }
        };
        assert!(matches!(
            check_layer_consistency(&t, cmp, &[]),
            Err(LayerWitness::Inconsistent { .. })
        ));
    }
}
