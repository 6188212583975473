mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixture_path;
use mitree::io::{parse_tree, serialise_tree};
use mitree::synth::HeightStyle;

fn mitree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mitree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn distance_of_the_fixture_pair() {
    let (a, b) = (fixture_path("tree_a.json"), fixture_path("tree_b.json"));
    let o = mitree(&["distance", &a, &b]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "1.000000000\n");
    assert_eq!(stdout(&mitree(&["distance", &a, &a])), "0.000000000\n");
    // repeated runs print identical bytes
    assert_eq!(mitree(&["distance", &a, &b]).stdout, o.stdout);
}

#[test]
fn emitted_certificates_verify() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (fixture_path("tree_a.json"), fixture_path("tree_b.json"));
    let o = mitree(&["distance", &a, &b, "--emit-certificate", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for kind in ["interleaving", "goodmap", "labelling"] {
        let cert = dir.path().join(format!("{kind}.json"));
        let ok = mitree(&["verify", kind, &a, &b, s(&cert)]);
        assert_eq!(code(&ok), 0, "{kind}: {}", String::from_utf8_lossy(&ok.stderr));
        assert_eq!(stdout(&ok), "ok at delta 1\n");
        let low = mitree(&["verify", kind, &a, &b, s(&cert), "--delta", "0.9"]);
        assert_eq!(code(&low), 1, "{kind} should fail below the distance");
        assert!(!low.stderr.is_empty());
    }
    let wrong = mitree(&["verify", "goodmap", &a, &b, s(&dir.path().join("labelling.json"))]);
    assert_eq!(code(&wrong), 2);
}

#[test]
fn validate_reports_size_and_rejects_bad_documents() {
    let o = mitree(&["validate", &fixture_path("tree_a.json")]);
    assert_eq!(stdout(&o), "ok: 4 vertices, 2 leaves\n");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(fixture_path("tree_a.json"))
        .unwrap()
        .replace("\"height\": 0", "\"height\": 5");
    std::fs::write(&bad, text).unwrap();
    let o = mitree(&["validate", s(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-strict height"));

    assert_eq!(
        code(&mitree(&["validate", s(&dir.path().join("missing.json"))])),
        2
    );
    assert_eq!(code(&mitree(&["frobnicate"])), 2);
}

#[test]
fn curve_csv_lists_the_extrema() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("a.svg");
    let o = mitree(&["curve", &fixture_path("tree_a.json"), "--svg", s(&svg)]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "param,height\n0,inf\n0.25,0\n0.5,3\n0.75,1\n1,inf\n");
    assert!(std::fs::read_to_string(svg).unwrap().contains("<polyline"));
}

#[test]
fn convert_prints_leaf_and_layer_orders() {
    let o = mitree(&["convert", &fixture_path("tree_b.json"), "--at", "2", "--at", "4"]);
    assert_eq!(
        stdout(&o),
        "leaf order: w1 < w2\nlayer 2: w1@2 < w2@2\nlayer 4: v@4\n"
    );
}

#[test]
fn reduce_writes_two_valid_trees() {
    let dir = tempfile::tempdir().unwrap();
    let o = mitree(&[
        "reduce",
        "--set",
        "1,1,2",
        "--m",
        "2",
        "--output-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["source.json", "target.json"] {
        parse_tree(&std::fs::read_to_string(dir.path().join(name)).unwrap()).unwrap();
    }
    assert_eq!(code(&mitree(&["reduce", "--set", "1,2", "--m", "2"])), 2);
}

#[test]
fn all_pairs_covers_every_pair_once() {
    let dir = tempfile::tempdir().unwrap();
    for (i, seed) in [3u64, 4, 5].into_iter().enumerate() {
        let t = common::tree(seed, 6, HeightStyle::Continuous);
        std::fs::write(dir.path().join(format!("t{i}.json")), serialise_tree(&t)).unwrap();
    }
    let o = mitree(&["distance", "--all-pairs", s(dir.path())]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let pairs: Vec<(&str, &str)> = out
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0], f[1])
        })
        .collect();
    assert_eq!(
        pairs,
        [
            ("t0.json", "t1.json"),
            ("t0.json", "t2.json"),
            ("t1.json", "t2.json")
        ]
    );
    let line = out.lines().next().unwrap();
    let one = mitree(&[
        "distance",
        s(&dir.path().join("t0.json")),
        s(&dir.path().join("t1.json")),
    ]);
    assert_eq!(format!("{}\n", line.split('\t').nth(2).unwrap()), stdout(&one));
}
