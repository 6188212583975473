//! Tree and certificate documents, plus curve export.
//!
//! Documents are JSON. Serialisation is canonical: object keys are sorted,
//! vertices appear in pre-order, numbers use the shortest decimal that
//! parses back to the same `f64`, and `+inf` is written as the string
//! `"inf"`. The root record carries the literal parent `"root"`, so no
//! vertex may use that id.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::curves::Curve1D;
use crate::interleaving::{
    check_good_map, check_monotone, check_monotone_interleaving, check_monotone_labelling, good_to_labelling,
    induced_matrix, labelling_to_interleaving, CertificateError, DistanceCertificate, GoodVariant, Labelling,
    Matrix, ShiftMap,
};
use crate::ordering::{OrderedMergeTree, OrderingError};
use crate::tree::{validate_tree, MergeTree, TreeBuilder, TreeError, TreePoint, VertexId};

/// Version written into, and required from, every document.
pub const FORMAT_VERSION: u32 = 1;

/// Parent value marking the root record.
pub const ROOT_MARKER: &str = "root";

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DocumentError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{invariant}{}: {detail}", .vertex.as_ref().map(|v| format!(" at `{v}`")).unwrap_or_default())]
    Semantic {
        invariant: String,
        vertex: Option<String>,
        detail: String,
    },
}

impl DocumentError {
    fn semantic(invariant: &str, vertex: Option<&str>, detail: impl Into<String>) -> Self {
        DocumentError::Semantic {
            invariant: invariant.to_owned(),
            vertex: vertex.map(str::to_owned),
            detail: detail.into(),
        }
    }
}

impl From<serde_json::Error> for DocumentError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends the position to its message; keep just the text
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_owned(),
            None => message,
        };
        DocumentError::Syntax {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}

impl From<TreeError> for DocumentError {
    fn from(e: TreeError) -> Self {
        match &e {
            TreeError::Invalid(v) => DocumentError::semantic(v.invariant(), v.vertex(), e.to_string()),
            TreeError::Cycle(v) => DocumentError::semantic("acyclic parent links", Some(v), e.to_string()),
            TreeError::TwoParents(v) => DocumentError::semantic("single parent", Some(v), e.to_string()),
            TreeError::DuplicateName(v) => DocumentError::semantic("unique ids", Some(v), e.to_string()),
            _ => DocumentError::semantic("tree structure", None, e.to_string()),
        }
    }
}

impl From<OrderingError> for DocumentError {
    fn from(e: OrderingError) -> Self {
        match e {
            OrderingError::Tree(t) => t.into(),
            other => DocumentError::semantic("leaf order", None, other.to_string()),
        }
    }
}

/// A height that may be `+inf`, written as `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Height(f64);

impl Serialize for Height {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Height {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct HeightVisitor;
        impl Visitor<'_> for HeightVisitor {
            type Value = Height;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Height, E> {
                Ok(Height(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Height, E> {
                Ok(Height(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Height, E> {
                Ok(Height(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Height, E> {
                match v {
                    "inf" => Ok(Height(f64::INFINITY)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(HeightVisitor)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVertex {
    id: String,
    parent: String,
    height: Height,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTree {
    version: u32,
    vertices: Vec<RawVertex>,
    #[serde(default)]
    children: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    metadata: BTreeMap<String, Value>,
}

/// An ordered merge tree with free-form metadata.
#[derive(Clone, Debug)]
pub struct TreeDocument {
    pub tree: OrderedMergeTree,
    pub metadata: BTreeMap<String, Value>,
}

impl TreeDocument {
    pub fn new(tree: OrderedMergeTree) -> Self {
        TreeDocument {
            tree,
            metadata: BTreeMap::new(),
        }
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
fn canonical_json<T: Serialize>(raw: &T) -> String {
    // going through `Value` sorts every object's keys
    let value = serde_json::to_value(raw).expect("plain data serialises");
    let mut out = serde_json::to_string_pretty(&value).expect("plain data serialises");
    out.push('\n');
    out
}

fn check_version(version: u32) -> Result<(), DocumentError> {
    if version == FORMAT_VERSION {
        Ok(())
    } else {
        Err(DocumentError::semantic(
            "format version",
            None,
            format!("expected {FORMAT_VERSION}, found {version}"),
        ))
    }
}

pub fn parse_tree(text: &str) -> Result<OrderedMergeTree, DocumentError> {
    parse_document(text).map(|d| d.tree)
}

pub fn parse_document(text: &str) -> Result<TreeDocument, DocumentError> {
    let raw: RawTree = serde_json::from_str(text)?;
    check_version(raw.version)?;

    let mut b = TreeBuilder::new();
    let mut ids: HashMap<&str, VertexId> = HashMap::with_capacity(raw.vertices.len());
    for v in &raw.vertices {
        if v.id == ROOT_MARKER {
            return Err(DocumentError::semantic(
                "reserved id",
                Some(&v.id),
                "`root` only marks the root's parent",
            ));
        }
        let id = b.add_vertex(v.id.as_str(), v.height.0);
        if ids.insert(&v.id, id).is_some() {
            return Err(DocumentError::semantic(
                "unique ids",
                Some(&v.id),
                "id is used twice",
            ));
        }
    }

    let mut linked: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut root: Option<&str> = None;
    for v in &raw.vertices {
        if v.parent == ROOT_MARKER {
            if let Some(r) = root {
                return Err(DocumentError::semantic(
                    "multiple roots",
                    Some(&v.id),
                    format!("`{r}` is also marked as the root"),
                ));
            }
            root = Some(&v.id);
        } else if ids.contains_key(v.parent.as_str()) {
            linked.entry(&v.parent).or_default().push(&v.id);
        } else {
            return Err(DocumentError::semantic(
                "known parent",
                Some(&v.id),
                format!("parent `{}` is not a vertex", v.parent),
            ));
        }
    }
    if root.is_none() {
        return Err(DocumentError::semantic(
            "root",
            None,
            "no vertex has parent \"root\"",
        ));
    }
    if let Some(k) = raw.children.keys().find(|k| !ids.contains_key(k.as_str())) {
        return Err(DocumentError::semantic(
            "known vertex",
            Some(k),
            "children listed for an unknown vertex",
        ));
    }

    for v in &raw.vertices {
        let mut want: Vec<&str> = linked.get(v.id.as_str()).cloned().unwrap_or_default();
        let given: Vec<&str> = raw
            .children
            .get(&v.id)
            .map(|c| c.iter().map(String::as_str).collect())
            .unwrap_or_default();
        let mut sorted = given.clone();
        sorted.sort_unstable();
        want.sort_unstable();
        if sorted != want {
            return Err(DocumentError::semantic(
                "children order",
                Some(&v.id),
                format!("children array {given:?} does not match the parent links {want:?}"),
            ));
        }
        for c in given {
            b.attach(ids[c], ids[v.id.as_str()])?;
        }
    }

    let tree = b.build_unchecked()?;
    validate_tree(&tree).map_err(TreeError::from)?;
    Ok(TreeDocument {
        tree: OrderedMergeTree::from_tree(tree)?,
        metadata: raw.metadata,
    })
}

pub fn serialise_tree(t: &OrderedMergeTree) -> String {
    serialise_document(&TreeDocument::new(t.clone()))
}

pub fn serialise_document(doc: &TreeDocument) -> String {
    let t = doc.tree.tree();
    let vertices = t
        .preorder()
        .into_iter()
        .map(|v| RawVertex {
            id: t.name(v).to_owned(),
            parent: t.parent(v).map_or(ROOT_MARKER, |p| t.name(p)).to_owned(),
            height: Height(t.height(v)),
        })
        .collect();
    let children = t
        .vertices()
        .filter(|&v| !t.is_leaf(v))
        .map(|v| {
            let names = t.children(v).iter().map(|&c| t.name(c).to_owned()).collect();
            (t.name(v).to_owned(), names)
        })
        .collect();
    canonical_json(&RawTree {
        version: FORMAT_VERSION,
        vertices,
        children,
        metadata: doc.metadata.clone(),
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoint {
    edge: String,
    height: Height,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawImage {
    leaf: String,
    image: RawPoint,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawCertificate {
    Interleaving {
        version: u32,
        delta: f64,
        alpha: Vec<RawImage>,
        beta: Vec<RawImage>,
    },
    Goodmap {
        version: u32,
        delta: f64,
        alpha: Vec<RawImage>,
    },
    Labelling {
        version: u32,
        delta: f64,
        pi: Vec<RawPoint>,
        pi_prime: Vec<RawPoint>,
        matrix_src: Vec<Vec<Height>>,
        matrix_tgt: Vec<Vec<Height>>,
    },
}

/// The three certificate forms, tied to a source and target tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    Interleaving { alpha: ShiftMap, beta: ShiftMap },
    GoodMap { alpha: ShiftMap },
    Labelling { delta: f64, labelling: Labelling },
}

impl Certificate {
    pub fn delta(&self) -> f64 {
        match self {
            Certificate::Interleaving { alpha, .. } | Certificate::GoodMap { alpha } => alpha.delta(),
            Certificate::Labelling { delta, .. } => *delta,
        }
    }

    /// The `kind` tag written into the document.
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::Interleaving { .. } => "interleaving",
            Certificate::GoodMap { .. } => "goodmap",
            Certificate::Labelling { .. } => "labelling",
        }
    }

    /// Checks the certificate at threshold `delta`, which need not be the
    /// stored one.
    pub fn verify(
        &self,
        src: &OrderedMergeTree,
        tgt: &OrderedMergeTree,
        delta: f64,
    ) -> Result<(), CertificateError> {
        match self {
            Certificate::Interleaving { alpha, beta } => {
                check_monotone_interleaving(src, tgt, &alpha.with_delta(delta), &beta.with_delta(delta))
            }
            Certificate::GoodMap { alpha } => {
                let alpha = alpha.with_delta(delta);
                check_monotone(src, tgt, &alpha)?;
                check_good_map(src, tgt, &alpha, GoodVariant::TW)?;
                check_good_map(src, tgt, &alpha, GoodVariant::G)
            }
            Certificate::Labelling { labelling, .. } => {
                check_monotone_labelling(src, tgt, labelling)?;
                let (alpha, beta) = labelling_to_interleaving(src, tgt, labelling, delta)?;
                check_monotone_interleaving(src, tgt, &alpha, &beta)
            }
        }
    }

    /// The interleaving of a distance computation together with the good
    /// map and labelling derived from it.
    pub fn all_forms(
        src: &OrderedMergeTree,
        tgt: &OrderedMergeTree,
        cert: &DistanceCertificate,
    ) -> Result<[Certificate; 3], CertificateError> {
        let labelling = good_to_labelling(src, tgt, &cert.alpha)?;
        Ok([
            Certificate::Interleaving {
                alpha: cert.alpha.clone(),
                beta: cert.beta.clone(),
            },
            Certificate::GoodMap {
                alpha: cert.alpha.clone(),
            },
            Certificate::Labelling {
                delta: cert.delta,
                labelling,
            },
        ])
    }
}

fn raw_point(t: &MergeTree, p: &TreePoint) -> RawPoint {
    RawPoint {
        edge: t.name(p.edge()).to_owned(),
        height: Height(p.height()),
    }
}

fn raw_images(from: &MergeTree, to: &MergeTree, m: &ShiftMap) -> Vec<RawImage> {
    m.images()
        .iter()
        .map(|(u, p)| RawImage {
            leaf: from.name(*u).to_owned(),
            image: raw_point(to, p),
        })
        .collect()
}

fn raw_matrix(m: &Matrix) -> Vec<Vec<Height>> {
    m.rows().map(|r| r.iter().map(|&h| Height(h)).collect()).collect()
}

pub fn serialise_certificate(src: &OrderedMergeTree, tgt: &OrderedMergeTree, cert: &Certificate) -> String {
    let (s, t) = (src.tree(), tgt.tree());
    let raw = match cert {
        Certificate::Interleaving { alpha, beta } => RawCertificate::Interleaving {
            version: FORMAT_VERSION,
            delta: alpha.delta(),
            alpha: raw_images(s, t, alpha),
            beta: raw_images(t, s, beta),
        },
        Certificate::GoodMap { alpha } => RawCertificate::Goodmap {
            version: FORMAT_VERSION,
            delta: alpha.delta(),
            alpha: raw_images(s, t, alpha),
        },
        Certificate::Labelling { delta, labelling } => RawCertificate::Labelling {
            version: FORMAT_VERSION,
            delta: *delta,
            pi: labelling.pi().iter().map(|p| raw_point(s, p)).collect(),
            pi_prime: labelling.pi_prime().iter().map(|p| raw_point(t, p)).collect(),
            matrix_src: raw_matrix(&labelling.matrix_src(src)),
            matrix_tgt: raw_matrix(&labelling.matrix_tgt(tgt)),
        },
    };
    canonical_json(&raw)
}

fn vertex(t: &MergeTree, name: &str) -> Result<VertexId, DocumentError> {
    t.find(name)
        .ok_or_else(|| DocumentError::semantic("known vertex", Some(name), "no vertex with this id"))
}

fn point(t: &MergeTree, p: &RawPoint) -> Result<TreePoint, DocumentError> {
    let v = vertex(t, &p.edge)?;
    t.point(v, p.height.0)
        .map_err(|e| DocumentError::semantic("point on tree", Some(&p.edge), e.to_string()))
}

fn shift_map(
    from: &MergeTree,
    to: &MergeTree,
    delta: f64,
    images: &[RawImage],
) -> Result<ShiftMap, DocumentError> {
    let images = images
        .iter()
        .map(|im| Ok((vertex(from, &im.leaf)?, point(to, &im.image)?)))
        .collect::<Result<Vec<_>, DocumentError>>()?;
    Ok(ShiftMap::new(delta, images))
}

fn check_matrix(recorded: &[Vec<Height>], induced: &Matrix, side: &str) -> Result<(), DocumentError> {
    let same = recorded.len() == induced.size()
        && recorded
            .iter()
            .zip(induced.rows())
            .all(|(r, m)| r.len() == m.len() && r.iter().zip(m).all(|(a, b)| a.0 == *b));
    if same {
        Ok(())
    } else {
        Err(DocumentError::semantic(
            "induced matrix",
            None,
            format!("{side} matrix does not match the labels"),
        ))
    }
}

pub fn parse_certificate(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    text: &str,
) -> Result<Certificate, DocumentError> {
    let (s, t) = (src.tree(), tgt.tree());
    match serde_json::from_str::<RawCertificate>(text)? {
        RawCertificate::Interleaving {
            version,
            delta,
            alpha,
            beta,
        } => {
            check_version(version)?;
            Ok(Certificate::Interleaving {
                alpha: shift_map(s, t, delta, &alpha)?,
                beta: shift_map(t, s, delta, &beta)?,
            })
        }
        RawCertificate::Goodmap {
            version,
            delta,
            alpha,
        } => {
            check_version(version)?;
            Ok(Certificate::GoodMap {
                alpha: shift_map(s, t, delta, &alpha)?,
            })
        }
        RawCertificate::Labelling {
            version,
            delta,
            pi,
            pi_prime,
            matrix_src,
            matrix_tgt,
        } => {
            check_version(version)?;
            let pi = pi.iter().map(|p| point(s, p)).collect::<Result<Vec<_>, _>>()?;
            let pi_prime = pi_prime
                .iter()
                .map(|p| point(t, p))
                .collect::<Result<Vec<_>, _>>()?;
            let labelling = Labelling::new(src, tgt, pi, pi_prime)
                .map_err(|e| DocumentError::semantic("labelling", None, e.to_string()))?;
            check_matrix(&matrix_src, &induced_matrix(s, labelling.pi()), "source")?;
            check_matrix(&matrix_tgt, &induced_matrix(t, labelling.pi_prime()), "target")?;
            Ok(Certificate::Labelling { delta, labelling })
        }
    }
}

/// `param,height` rows, one per sample, with `inf` at the two ends.
pub fn curve_csv(c: &Curve1D) -> String {
    let mut out = String::from("param,height\n");
    for (i, h) in c.heights().iter().enumerate() {
        out.push_str(&format!("{},{}\n", c.param(i), h));
    }
    out
}

/// The curve as one SVG polyline. User coordinates are `(param, -height)`;
/// the infinite ends are drawn on a line a little above the highest sample.
pub fn curve_svg(c: &Curve1D) -> String {
    let (lo, hi) = c.finite_range().unwrap_or((0.0, 0.0));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let cap = hi + 0.1 * span;
    let pad = 0.05 * span;
    let points: Vec<String> = c
        .heights()
        .iter()
        .enumerate()
        .map(|(i, &h)| format!("{},{}", c.param(i), -h.min(cap)))
        .collect();
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{x} {y} {w} {h}\" ",
            "width=\"800\" height=\"400\" preserveAspectRatio=\"none\">\n",
            "  <polyline fill=\"none\" stroke=\"black\" stroke-width=\"2\" ",
            "vector-effect=\"non-scaling-stroke\" points=\"{pts}\"/>\n",
            "</svg>\n"
        ),
        x = -0.02,
        y = -(cap + pad),
        w = 1.04,
        h = cap - lo + 2.0 * pad,
        pts = points.join(" "),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const TREE_A: &str = r#"{
  "children": {
    "infinity": ["v"],
    "v": ["u1", "u2"]
  },
  "version": 1,
  "vertices": [
    {"height": "inf", "id": "infinity", "parent": "root"},
    {"height": 3, "id": "v", "parent": "infinity"},
    {"height": 0, "id": "u1", "parent": "v"},
    {"height": 1, "id": "u2", "parent": "v"}
  ]
}"#;

    #[test]
    fn tree_a_document() {
        let t = parse_tree(TREE_A).unwrap();
        let tr = t.tree();
        assert_eq!(tr.leaves().len(), 2);
        assert_eq!(tr.name(t.leaf_order().as_slice()[0]), "u1");
        assert_eq!(tr.height(tr.find("v").unwrap()), 3.0);
        let text = serialise_tree(&t);
        assert_eq!(serialise_tree(&parse_tree(&text).unwrap()), text);
        assert!(text.find("\"children\"").unwrap() < text.find("\"version\"").unwrap());
    }

    #[test]
    fn infinite_non_root_is_semantic() {
        let bad = TREE_A.replace(r#"{"height": 0, "id": "u1""#, r#"{"height": "inf", "id": "u1""#);
        match parse_tree(&bad) {
            Err(DocumentError::Semantic { vertex, .. }) => assert_eq!(vertex.as_deref(), Some("u1")),
            other => panic!("expected a semantic error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_document_has_position() {
        let cut = &TREE_A[..TREE_A.len() / 2];
        match parse_tree(cut) {
            Err(DocumentError::Syntax { line, column, .. }) => assert!(line > 1 && column > 0),
            other => panic!("expected a syntax error, got {other:?}"),
        }
    }

    #[test]
    fn children_must_match_parents() {
        let bad = TREE_A.replace(r#""v": ["u1", "u2"]"#, r#""v": ["u1"]"#);
        assert!(matches!(
            parse_tree(&bad),
            Err(DocumentError::Semantic { invariant, .. }) if invariant == "children order"
        ));
    }

    #[test]
    fn reserved_and_duplicate_ids() {
        let bad = TREE_A.replace(r#""id": "u2""#, r#""id": "root""#);
        assert!(parse_tree(&bad).is_err());
        let twice = TREE_A.replace(r#""id": "u2""#, r#""id": "u1""#);
        assert!(parse_tree(&twice).is_err());
    }

    #[test]
    fn csv_has_inf_rows() {
        let c = Curve1D::new(vec![f64::INFINITY, 0.0, 3.0, 1.0, f64::INFINITY]).unwrap();
        assert_eq!(
            curve_csv(&c),
            "param,height\n0,inf\n0.25,0\n0.5,3\n0.75,1\n1,inf\n"
        );
        let svg = curve_svg(&c);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("points=\"0,-3.3 0.25,-0 0.5,-3 0.75,-1 1,-3.3\""));
    }
}
