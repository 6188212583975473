mod common;

use common::{fixture, pair, tree};
use mitree::interleaving::monotone_interleaving_distance;
use mitree::io::{
    parse_certificate, parse_document, parse_tree, serialise_certificate, serialise_document, serialise_tree,
    Certificate, DocumentError, TreeDocument,
};
use mitree::synth::HeightStyle;
use mitree::OrderedMergeTree;
use proptest::prelude::*;
use serde_json::json;

/// Names, parents, heights (bitwise) and children order of every vertex.
fn shape(t: &OrderedMergeTree) -> Vec<(String, Option<String>, u64, Vec<String>)> {
    let tr = t.tree();
    let mut out: Vec<_> = tr
        .vertices()
        .map(|v| {
            (
                tr.name(v).to_owned(),
                tr.parent(v).map(|p| tr.name(p).to_owned()),
                tr.height(v).to_bits(),
                tr.children(v).iter().map(|&c| tr.name(c).to_owned()).collect(),
            )
        })
        .collect();
    out.sort();
    out
}

fn invariant(text: &str) -> String {
    match parse_tree(text) {
        Err(DocumentError::Semantic { invariant, .. }) => invariant,
        other => panic!("expected a semantic error, got {other:?}"),
    }
}

fn doc(vertices: serde_json::Value, children: serde_json::Value) -> String {
    json!({ "version": 1, "vertices": vertices, "children": children }).to_string()
}

fn cherry_vertices() -> serde_json::Value {
    json!([
        { "id": "top", "parent": "root", "height": "inf" },
        { "id": "v", "parent": "top", "height": 3 },
        { "id": "a", "parent": "v", "height": 0 },
        { "id": "b", "parent": "v", "height": 1.5 }
    ])
}

#[test]
fn fixture_reads_and_writes_back_unchanged() {
    let path = common::fixture_path("tree_a.json");
    let text = std::fs::read_to_string(path).unwrap();
    let d = parse_document(&text).unwrap();
    assert_eq!(d.metadata["name"], "Tree A");
    let again = parse_document(&serialise_document(&d)).unwrap();
    assert_eq!(shape(&again.tree), shape(&d.tree));
    assert_eq!(again.metadata, d.metadata);
}

#[test]
fn children_arrays_fix_the_leaf_order() {
    let fwd = parse_tree(&doc(cherry_vertices(), json!({ "top": ["v"], "v": ["a", "b"] }))).unwrap();
    let back = parse_tree(&doc(cherry_vertices(), json!({ "top": ["v"], "v": ["b", "a"] }))).unwrap();
    let names = |t: &OrderedMergeTree| -> Vec<String> {
        t.leaf_order()
            .as_slice()
            .iter()
            .map(|&u| t.tree().name(u).to_owned())
            .collect()
    };
    assert_eq!(names(&fwd), ["a", "b"]);
    assert_eq!(names(&back), ["b", "a"]);
}

#[test]
fn malformed_documents_name_the_broken_rule() {
    let ch = json!({ "top": ["v"], "v": ["a", "b"] });
    let mut dup = cherry_vertices();
    dup[3]["id"] = json!("a");
    assert_eq!(
        invariant(&doc(dup, json!({ "top": ["v"], "v": ["a", "a"] }))),
        "unique ids"
    );

    let mut reserved = cherry_vertices();
    reserved[3]["id"] = json!("root");
    assert_eq!(
        invariant(&doc(reserved, json!({ "top": ["v"], "v": ["a", "root"] }))),
        "reserved id"
    );

    let mut orphan = cherry_vertices();
    orphan[3]["parent"] = json!("nowhere");
    assert_eq!(invariant(&doc(orphan, ch.clone())), "known parent");

    let mut two_roots = cherry_vertices();
    two_roots[1]["parent"] = json!("root");
    assert_eq!(invariant(&doc(two_roots, ch.clone())), "multiple roots");

    let mut tall = cherry_vertices();
    tall[2]["height"] = json!(3);
    assert_eq!(invariant(&doc(tall, ch.clone())), "non-strict height");

    let mut finite = cherry_vertices();
    finite[0]["height"] = json!(10);
    assert_eq!(invariant(&doc(finite, ch.clone())), "finite root");

    assert_eq!(
        invariant(&doc(cherry_vertices(), json!({ "top": ["v"], "v": ["a"] }))),
        "children order"
    );
    assert_eq!(
        invariant(&doc(
            cherry_vertices(),
            json!({ "top": ["v"], "v": ["a", "b"], "x": [] })
        )),
        "known vertex"
    );

    let wrong_version = json!({ "version": 2, "vertices": cherry_vertices(), "children": ch }).to_string();
    assert_eq!(invariant(&wrong_version), "format version");
}

#[test]
fn syntax_errors_carry_a_position() {
    match parse_tree("{\n  \"version\": 1,\n  \"vertices\": [,]\n}") {
        Err(DocumentError::Syntax { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        parse_tree(r#"{"version": 1, "vertices": [], "extra": 0}"#),
        Err(DocumentError::Syntax { .. })
    ));
    assert!(matches!(
        parse_tree(&doc(
            json!([{ "id": "x", "parent": "root", "height": "infinite" }]),
            json!({})
        )),
        Err(DocumentError::Syntax { .. })
    ));
}

#[test]
fn certificate_kinds_are_not_interchangeable() {
    let (a, b) = (fixture("tree_a.json"), fixture("tree_b.json"));
    let cert = monotone_interleaving_distance(&a, &b);
    let forms = Certificate::all_forms(&a, &b, &cert).unwrap();
    let kinds: Vec<&str> = forms.iter().map(Certificate::kind).collect();
    assert_eq!(kinds, ["interleaving", "goodmap", "labelling"]);
    for c in &forms {
        assert_eq!(c.delta(), 1.0);
        c.verify(&a, &b, 1.0).unwrap();
        assert!(c.verify(&a, &b, 0.5).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trees_round_trip_bit_for_bit(seed in any::<u64>()) {
        let t = tree(seed, 12, HeightStyle::Continuous);
        let text = serialise_tree(&t);
        let back = parse_tree(&text).unwrap();
        prop_assert_eq!(shape(&back), shape(&t));
        prop_assert_eq!(serialise_tree(&back), text);
    }

    #[test]
    fn metadata_survives_a_round_trip(seed in any::<u64>(), note in "[a-z ]{0,12}", n in any::<i32>()) {
        let mut d = TreeDocument::new(tree(seed, 5, HeightStyle::Dyadic));
        d.metadata.insert("note".into(), json!(note));
        d.metadata.insert("n".into(), json!(n));
        let back = parse_document(&serialise_document(&d)).unwrap();
        prop_assert_eq!(back.metadata, d.metadata);
    }

    #[test]
    fn certificates_round_trip_and_still_verify(seed in any::<u64>()) {
        let (a, b) = pair(seed, 7, HeightStyle::Continuous);
        let cert = monotone_interleaving_distance(&a, &b);
        for c in Certificate::all_forms(&a, &b, &cert).unwrap() {
            let text = serialise_certificate(&a, &b, &c);
            let back = parse_certificate(&a, &b, &text).unwrap();
            prop_assert_eq!(&back, &c);
            back.verify(&a, &b, back.delta()).unwrap();
        }
    }
}
