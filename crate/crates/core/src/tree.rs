//! Merge trees and points of their topological realisation.
//!
//! A tree is stored as a flat vertex table. The root sits at height `+inf`
//! and has a single child (the trunk edge). Every other point of the
//! realisation is a [`TreePoint`]: the lower endpoint of the edge it lies on
//! together with its height.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

/// Index of a vertex inside its [`MergeTree`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

impl VertexId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A point `(edge, height)` where `edge` is the lower vertex of the edge
/// containing the point and `f(edge) <= height < f(parent(edge))`.
/// The root is `(root, +inf)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreePoint {
    edge: VertexId,
    height: f64,
}

impl TreePoint {
    pub fn edge(&self) -> VertexId {
        self.edge
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn is_root(&self) -> bool {
        self.height == f64::INFINITY
    }

    /// Caller guarantees `(edge, height)` is canonical.
    pub(crate) fn from_raw(edge: VertexId, height: f64) -> TreePoint {
        TreePoint { edge, height }
    }
}

impl fmt::Display for TreePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.edge, self.height)
    }
}

/// The first invariant a candidate tree breaks.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum Violation {
    #[error("tree has no vertices")]
    Empty,
    #[error("multiple roots: `{first}` and `{second}`")]
    MultipleRoots { first: String, second: String },
    #[error("root `{0}` does not have height +inf")]
    FiniteRoot(String),
    #[error("root `{vertex}` must have exactly one child, found {count}")]
    RootDegree { vertex: String, count: usize },
    #[error("vertex `{0}` has height +inf but is not the root")]
    InfiniteNonRoot(String),
    #[error("vertex `{0}` has a NaN height")]
    NanHeight(String),
    #[error("non-strict height: `{child}` is not below its parent `{parent}`")]
    NonStrictHeight { child: String, parent: String },
    #[error("degree-1 interior vertex `{0}`")]
    DegreeOneInterior(String),
}

impl Violation {
    /// Short machine-friendly name of the broken invariant.
    pub fn invariant(&self) -> &'static str {
        match self {
            Violation::Empty => "empty tree",
            Violation::MultipleRoots { .. } => "multiple roots",
            Violation::FiniteRoot(_) => "finite root",
            Violation::RootDegree { .. } => "root degree",
            Violation::InfiniteNonRoot(_) => "infinite non-root",
            Violation::NanHeight(_) => "nan height",
            Violation::NonStrictHeight { .. } => "non-strict height",
            Violation::DegreeOneInterior(_) => "degree-1 interior vertex",
        }
    }

    /// Name of the offending vertex, when there is one.
    pub fn vertex(&self) -> Option<&str> {
        match self {
            Violation::Empty => None,
            Violation::MultipleRoots { second, .. } => Some(second),
            Violation::FiniteRoot(v)
            | Violation::InfiniteNonRoot(v)
            | Violation::NanHeight(v)
            | Violation::DegreeOneInterior(v) => Some(v),
            Violation::RootDegree { vertex, .. } => Some(vertex),
            Violation::NonStrictHeight { child, .. } => Some(child),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum TreeError {
    #[error("invalid merge tree: {0}")]
    Invalid(#[from] Violation),
    #[error("vertex index {0} out of range")]
    UnknownVertex(usize),
    #[error("vertex `{0}` is given two parents")]
    TwoParents(String),
    #[error("parent links form a cycle through `{0}`")]
    Cycle(String),
    #[error("duplicate vertex name `{0}`")]
    DuplicateName(String),
    #[error("height {height} is below the point at height {base}")]
    BelowPoint { height: f64, base: f64 },
    #[error("height is NaN")]
    NanHeight,
}

#[derive(Clone, Debug)]
struct Vertex {
    name: String,
    height: f64,
    parent: Option<VertexId>,
    children: Vec<VertexId>,
}

/// A rooted tree with a height function, strictly increasing toward the root.
#[derive(Clone, Debug)]
pub struct MergeTree {
    vertices: Vec<Vertex>,
    root: VertexId,
    depth: Vec<usize>,
    leaves: Vec<VertexId>,
}

/// Incremental constructor for [`MergeTree`]. Children keep the order in
/// which they were attached.
#[derive(Clone, Debug, Default)]
pub struct TreeBuilder {
    vertices: Vec<Vertex>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, name: impl Into<String>, height: f64) -> VertexId {
        self.vertices.push(Vertex {
            name: name.into(),
            height,
            parent: None,
            children: Vec::new(),
        });
        VertexId(self.vertices.len() - 1)
    }

    pub fn leaf(&mut self, name: impl Into<String>, height: f64) -> VertexId {
        self.add_vertex(name, height)
    }

    /// Adds a vertex and attaches `children` below it, in the given order.
    pub fn merge(
        &mut self,
        name: impl Into<String>,
        height: f64,
        children: &[VertexId],
    ) -> Result<VertexId, TreeError> {
        let v = self.add_vertex(name, height);
        for &c in children {
            self.attach(c, v)?;
        }
        Ok(v)
    }

    /// Adds the `+inf` root, named `infinity`, above `top`.
    pub fn root(&mut self, top: VertexId) -> Result<VertexId, TreeError> {
        self.merge("infinity", f64::INFINITY, &[top])
    }

    pub fn attach(&mut self, child: VertexId, parent: VertexId) -> Result<(), TreeError> {
        let n = self.vertices.len();
        for v in [child, parent] {
            if v.0 >= n {
                return Err(TreeError::UnknownVertex(v.0));
            }
        }
        if self.vertices[child.0].parent.is_some() {
            return Err(TreeError::TwoParents(self.vertices[child.0].name.clone()));
        }
        self.vertices[child.0].parent = Some(parent);
        self.vertices[parent.0].children.push(child);
        Ok(())
    }

    /// Builds and validates.
    pub fn build(self) -> Result<MergeTree, TreeError> {
        let t = self.build_unchecked()?;
        validate_tree(&t)?;
        Ok(t)
    }

    /// Builds without checking the merge-tree invariants. Only structural
    /// soundness (acyclic parent links, unique names) is enforced, so the
    /// result may be fed to [`validate_tree`] or [`MergeTree::normalised`].
    pub fn build_unchecked(self) -> Result<MergeTree, TreeError> {
        MergeTree::from_vertices(self.vertices)
    }
}

impl MergeTree {
    pub fn builder() -> TreeBuilder {
        TreeBuilder::new()
    }

    fn from_vertices(vertices: Vec<Vertex>) -> Result<Self, TreeError> {
        let n = vertices.len();
        let mut names = std::collections::HashSet::with_capacity(n);
        for v in &vertices {
            if !names.insert(v.name.as_str()) {
                return Err(TreeError::DuplicateName(v.name.clone()));
            }
        }
        let root = vertices
            .iter()
            .position(|v| v.parent.is_none())
            .map(VertexId)
            .unwrap_or(VertexId(0));
        // depth from the nearest parentless ancestor; detects cycles
        let mut depth = vec![usize::MAX; n];
        for start in 0..n {
            let mut path = Vec::new();
            let mut cur = start;
            while depth[cur] == usize::MAX {
                if path.len() > n {
                    return Err(TreeError::Cycle(vertices[start].name.clone()));
                }
                path.push(cur);
                match vertices[cur].parent {
                    Some(p) => cur = p.0,
                    None => {
                        depth[cur] = 0;
                        path.pop();
                        break;
                    }
                }
            }
            let mut d = depth[cur];
            while let Some(v) = path.pop() {
                d += 1;
                depth[v] = d;
            }
        }
        let mut t = MergeTree {
            vertices,
            root,
            depth,
            leaves: Vec::new(),
        };
        t.leaves = t.preorder().into_iter().filter(|&v| t.is_leaf(v)).collect();
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn root_point(&self) -> TreePoint {
        TreePoint {
            edge: self.root,
            height: f64::INFINITY,
        }
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = VertexId> + '_ {
        (0..self.vertices.len()).map(VertexId)
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.vertices[v.0].name
    }

    pub fn find(&self, name: &str) -> Option<VertexId> {
        self.vertices.iter().position(|v| v.name == name).map(VertexId)
    }

    pub fn height(&self, v: VertexId) -> f64 {
        self.vertices[v.0].height
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.vertices[v.0].parent
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.vertices[v.0].children
    }

    pub fn depth(&self, v: VertexId) -> usize {
        self.depth[v.0]
    }

    pub fn is_leaf(&self, v: VertexId) -> bool {
        self.vertices[v.0].children.is_empty()
    }

    /// Leaves in depth-first order of the stored children lists.
    pub fn leaves(&self) -> &[VertexId] {
        &self.leaves
    }

    /// The topmost finite vertex (the lower end of the trunk edge).
    pub fn top(&self) -> VertexId {
        self.children(self.root)[0]
    }

    /// Vertices in depth-first pre-order, children visited in stored order.
    pub fn preorder(&self) -> Vec<VertexId> {
        self.preorder_from(self.root)
    }

    pub fn preorder_from(&self, v: VertexId) -> Vec<VertexId> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.children(v).iter().rev());
        }
        out
    }

    /// Leaves below `v` in stored order.
    pub fn subtree_leaves(&self, v: VertexId) -> Vec<VertexId> {
        self.preorder_from(v)
            .into_iter()
            .filter(|&w| self.is_leaf(w))
            .collect()
    }

    pub fn subtree_min_height(&self, v: VertexId) -> f64 {
        self.subtree_leaves(v)
            .into_iter()
            .map(|u| self.height(u))
            .fold(f64::INFINITY, f64::min)
    }

    /// Finite heights, smallest and largest.
    pub fn height_range(&self) -> (f64, f64) {
        self.vertices
            .iter()
            .map(|v| v.height)
            .filter(|h| h.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| {
                (lo.min(h), hi.max(h))
            })
    }

    /// Finite vertex heights, sorted and deduplicated.
    pub fn critical_heights(&self) -> Vec<f64> {
        let mut hs: Vec<f64> = self
            .vertices
            .iter()
            .map(|v| v.height)
            .filter(|h| h.is_finite())
            .collect();
        hs.sort_by(f64::total_cmp);
        hs.dedup();
        hs
    }

    /// Number of neighbours of `v` in the tree (children plus parent).
    pub fn vertex_degree(&self, v: VertexId) -> usize {
        self.children(v).len() + usize::from(self.parent(v).is_some())
    }

    // ---- points ----

    /// Canonical point at height `h` on the path from vertex `v` to the root.
    pub fn point(&self, v: VertexId, h: f64) -> Result<TreePoint, TreeError> {
        if v.0 >= self.len() {
            return Err(TreeError::UnknownVertex(v.0));
        }
        self.ancestor_at(&self.vertex_point(v), h)
    }

    pub fn vertex_point(&self, v: VertexId) -> TreePoint {
        TreePoint {
            edge: v,
            height: self.height(v),
        }
    }

    /// Returns the vertex at `p`, if `p` is one.
    pub fn as_vertex(&self, p: &TreePoint) -> Option<VertexId> {
        (self.height(p.edge) == p.height).then_some(p.edge)
    }

    /// The unique ancestor of `x` at height `h`.
    pub fn ancestor_at(&self, x: &TreePoint, h: f64) -> Result<TreePoint, TreeError> {
        if h.is_nan() {
            return Err(TreeError::NanHeight);
        }
        if h < x.height {
            return Err(TreeError::BelowPoint {
                height: h,
                base: x.height,
            });
        }
        if h == f64::INFINITY {
            return Ok(self.root_point());
        }
        let mut cur = x.edge;
        while let Some(p) = self.parent(cur) {
            if self.height(p) > h {
                return Ok(TreePoint { edge: cur, height: h });
            }
            cur = p;
        }
        Ok(self.root_point())
    }

    /// `x ⪯ y`: `y` lies on the path from `x` to the root.
    pub fn is_ancestor(&self, x: &TreePoint, y: &TreePoint) -> bool {
        y.height >= x.height && self.ancestor_at(x, y.height).map(|a| a == *y).unwrap_or(false)
    }

    pub fn lca_vertex(&self, a: VertexId, b: VertexId) -> VertexId {
        let (mut a, mut b) = (a, b);
        while self.depth(a) > self.depth(b) {
            a = self.parent(a).expect("depth > 0 has a parent");
        }
        while self.depth(b) > self.depth(a) {
            b = self.parent(b).expect("depth > 0 has a parent");
        }
        while a != b {
            match (self.parent(a), self.parent(b)) {
                (Some(pa), Some(pb)) => {
                    a = pa;
                    b = pb;
                }
                _ => break,
            }
        }
        a
    }

    /// Lowest common ancestor of two points.
    pub fn lca(&self, x: &TreePoint, y: &TreePoint) -> TreePoint {
        if self.is_ancestor(x, y) {
            *y
        } else if self.is_ancestor(y, x) {
            *x
        } else {
            self.vertex_point(self.lca_vertex(x.edge, y.edge))
        }
    }

    /// Points of height exactly `h`, in depth-first order of the stored
    /// children lists.
    pub fn level_set(&self, h: f64) -> Vec<TreePoint> {
        if h == f64::INFINITY {
            return vec![self.root_point()];
        }
        if h.is_nan() {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            if self.height(v) <= h {
                if self.parent(v).is_some_and(|p| self.height(p) > h) {
                    out.push(TreePoint { edge: v, height: h });
                }
                continue;
            }
            stack.extend(self.children(v).iter().rev());
        }
        out
    }

    /// Down-degree: number of children at a vertex, 1 inside an edge, 0 at a leaf.
    pub fn down_degree(&self, x: &TreePoint) -> usize {
        match self.as_vertex(x) {
            Some(v) => self.children(v).len(),
            None => 1,
        }
    }

    // ---- transformations ----

    /// Same tree with every finite height shifted by `c`.
    pub fn shifted(&self, c: f64) -> MergeTree {
        let mut t = self.clone();
        for v in &mut t.vertices {
            if v.height.is_finite() {
                v.height += c;
            }
        }
        t
    }

    /// Shifted so that the lowest leaf sits at height 0.
    pub fn shifted_to_zero(&self) -> MergeTree {
        self.shifted(-self.height_range().0)
    }

    /// Same tree with children lists replaced; `order` must permute each list.
    pub(crate) fn with_children(&self, children: Vec<Vec<VertexId>>) -> MergeTree {
        let mut verts = self.vertices.clone();
        for (v, ch) in verts.iter_mut().zip(children) {
            v.children = ch;
        }
        MergeTree::from_vertices(verts).expect("reordering preserves structure")
    }

    /// Contracts every degree-1 interior vertex. Vertex ids are renumbered;
    /// names and child order are kept.
    pub fn normalised(&self) -> MergeTree {
        let keep: Vec<bool> = self
            .vertices()
            .map(|v| v == self.root || self.children(v).len() != 1)
            .collect();
        let mut new_id = vec![usize::MAX; self.len()];
        let mut verts = Vec::new();
        for v in self.vertices() {
            if keep[v.0] {
                new_id[v.0] = verts.len();
                verts.push(Vertex {
                    name: self.vertices[v.0].name.clone(),
                    height: self.height(v),
                    parent: None,
                    children: Vec::new(),
                });
            }
        }
        let kept_ancestor = |mut v: VertexId| -> Option<VertexId> {
            while let Some(p) = self.parent(v) {
                if keep[p.0] {
                    return Some(p);
                }
                v = p;
            }
            None
        };
        let kept_descendant = |mut v: VertexId| -> VertexId {
            while !keep[v.0] {
                v = self.children(v)[0];
            }
            v
        };
        for v in self.vertices().filter(|v| keep[v.0]) {
            let nv = new_id[v.0];
            verts[nv].parent = kept_ancestor(v).map(|p| VertexId(new_id[p.0]));
            verts[nv].children = self
                .children(v)
                .iter()
                .map(|&c| VertexId(new_id[kept_descendant(c).0]))
                .collect();
        }
        MergeTree::from_vertices(verts).expect("contraction preserves structure")
    }
}

/// Checks the merge-tree invariants and reports the first one broken.
pub fn validate_tree(t: &MergeTree) -> Result<(), Violation> {
    if t.is_empty() {
        return Err(Violation::Empty);
    }
    let mut roots = t.vertices().filter(|&v| t.parent(v).is_none());
    let root = roots.next().expect("acyclic non-empty tree has a root");
    if let Some(second) = roots.next() {
        return Err(Violation::MultipleRoots {
            first: t.name(root).to_owned(),
            second: t.name(second).to_owned(),
        });
    }
    for v in t.vertices() {
        if t.height(v).is_nan() {
            return Err(Violation::NanHeight(t.name(v).to_owned()));
        }
    }
    if t.height(root) != f64::INFINITY {
        return Err(Violation::FiniteRoot(t.name(root).to_owned()));
    }
    if t.children(root).len() != 1 {
        return Err(Violation::RootDegree {
            vertex: t.name(root).to_owned(),
            count: t.children(root).len(),
        });
    }
    for v in t.preorder() {
        if v == root {
            continue;
        }
        if t.height(v) == f64::INFINITY || t.height(v) == f64::NEG_INFINITY {
            return Err(Violation::InfiniteNonRoot(t.name(v).to_owned()));
        }
        let p = t.parent(v).expect("non-root has a parent");
        if t.height(v).partial_cmp(&t.height(p)) != Some(Ordering::Less) {
            return Err(Violation::NonStrictHeight {
                child: t.name(v).to_owned(),
                parent: t.name(p).to_owned(),
            });
        }
        if t.children(v).len() == 1 {
            return Err(Violation::DegreeOneInterior(t.name(v).to_owned()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// u1@0, u2@1 merging at v@3; a cherry with a pendant leaf u3@2 at w@5.
    fn sample() -> MergeTree {
        let mut b = TreeBuilder::new();
        let u1 = b.leaf("u1", 0.0);
        let u2 = b.leaf("u2", 1.0);
        let v = b.merge("v", 3.0, &[u1, u2]).unwrap();
        let u3 = b.leaf("u3", 2.0);
        let w = b.merge("w", 5.0, &[v, u3]).unwrap();
        b.root(w).unwrap();
        b.build().unwrap()
    }

    fn id(t: &MergeTree, n: &str) -> VertexId {
        t.find(n).unwrap()
    }

    #[test]
    fn ancestor_walk_on_trunk_and_edges() {
        let t = sample();
        let u1 = t.vertex_point(id(&t, "u1"));
        assert_eq!(
            t.ancestor_at(&u1, 2.0).unwrap(),
            TreePoint {
                edge: id(&t, "u1"),
                height: 2.0
            }
        );
        assert_eq!(t.ancestor_at(&u1, 3.0).unwrap(), t.vertex_point(id(&t, "v")));
        assert_eq!(
            t.ancestor_at(&u1, 7.5).unwrap(),
            TreePoint {
                edge: id(&t, "w"),
                height: 7.5
            }
        );
        assert!(t.ancestor_at(&u1, f64::INFINITY).unwrap().is_root());
        assert!(matches!(
            t.ancestor_at(&t.vertex_point(id(&t, "v")), 1.0),
            Err(TreeError::BelowPoint { .. })
        ));
    }

    #[test]
    fn lca_of_points() {
        let t = sample();
        let a = t.point(id(&t, "u1"), 0.5).unwrap();
        let b = t.point(id(&t, "u2"), 2.5).unwrap();
        assert_eq!(t.lca(&a, &b), t.vertex_point(id(&t, "v")));
        let c = t.point(id(&t, "u3"), 2.0).unwrap();
        assert_eq!(t.lca(&a, &c), t.vertex_point(id(&t, "w")));
        let high = t.point(id(&t, "u1"), 4.0).unwrap();
        assert_eq!(t.lca(&a, &high), high);
        assert_eq!(t.lca(&high, &b), high);
        // two points on one edge
        let a2 = t.point(id(&t, "u1"), 1.5).unwrap();
        assert_eq!(t.lca(&a, &a2), a2);
    }

    #[test]
    fn level_sets() {
        let t = sample();
        let names = |h: f64| -> Vec<String> {
            t.level_set(h)
                .iter()
                .map(|p| t.name(p.edge()).to_owned())
                .collect()
        };
        assert_eq!(names(2.0), ["u1", "u2", "u3"]);
        assert_eq!(names(0.5), ["u1"]);
        assert_eq!(names(3.0), ["v", "u3"]);
        assert_eq!(names(5.0), ["w"]);
        assert_eq!(names(100.0), ["w"]);
        assert!(t.level_set(-1.0).is_empty());
    }

    #[test]
    fn validation_reports_first_violation() {
        let mut b = TreeBuilder::new();
        let u = b.leaf("u", 2.0);
        let v = b.leaf("v", 1.0);
        let w = b.merge("w", 2.0, &[u, v]).unwrap();
        b.root(w).unwrap();
        let err = validate_tree(&b.build_unchecked().unwrap()).unwrap_err();
        assert_eq!(err.invariant(), "non-strict height");
        assert_eq!(err.vertex(), Some("u"));

        let mut b = TreeBuilder::new();
        let u = b.leaf("u", 0.0);
        b.root(u).unwrap();
        b.add_vertex("stray", f64::INFINITY);
        let err = validate_tree(&b.build_unchecked().unwrap()).unwrap_err();
        assert_eq!(err.invariant(), "multiple roots");
    }

    #[test]
    fn cycles_are_rejected() {
        let mut b = TreeBuilder::new();
        let a = b.leaf("a", 0.0);
        let c = b.leaf("c", 1.0);
        b.attach(a, c).unwrap();
        b.attach(c, a).unwrap();
        assert!(matches!(b.build_unchecked(), Err(TreeError::Cycle(_))));
    }

    #[test]
    fn normalise_contracts_chains() {
        let mut b = TreeBuilder::new();
        let u1 = b.leaf("u1", 0.0);
        let u2 = b.leaf("u2", 1.0);
        let d = b.merge("d", 0.5, &[u1]).unwrap();
        let v = b.merge("v", 3.0, &[d, u2]).unwrap();
        let e = b.merge("e", 4.0, &[v]).unwrap();
        b.root(e).unwrap();
        let raw = b.build_unchecked().unwrap();
        assert_eq!(
            validate_tree(&raw).unwrap_err().invariant(),
            "degree-1 interior vertex"
        );
        let t = raw.normalised();
        validate_tree(&t).unwrap();
        assert_eq!(t.len(), 4);
        let v = t.find("v").unwrap();
        let names: Vec<_> = t.children(v).iter().map(|&c| t.name(c)).collect();
        assert_eq!(names, ["u1", "u2"]);
    }

    #[test]
    fn shift_moves_finite_heights_only() {
        let t = sample().shifted(2.5);
        assert_eq!(t.height(t.find("u1").unwrap()), 2.5);
        assert_eq!(t.height(t.root()), f64::INFINITY);
        assert_eq!(t.shifted_to_zero().height_range().0, 0.0);
    }
}
