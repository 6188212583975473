//! Helpers shared by the integration tests.
#![allow(dead_code)]

use mitree::io::parse_tree;
use mitree::synth::{random_tree, HeightStyle};
use mitree::{MergeTree, OrderedMergeTree, TreePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random tree with between 1 and `max_leaves` leaves.
pub fn tree(seed: u64, max_leaves: usize, style: HeightStyle) -> OrderedMergeTree {
    let mut r = rng(seed);
    let n = r.random_range(1..=max_leaves);
    random_tree(&mut r, n, style)
}

pub fn pair(seed: u64, max_leaves: usize, style: HeightStyle) -> (OrderedMergeTree, OrderedMergeTree) {
    let mut r = rng(seed);
    let (n1, n2) = (r.random_range(1..=max_leaves), r.random_range(1..=max_leaves));
    (random_tree(&mut r, n1, style), random_tree(&mut r, n2, style))
}

pub fn fixture(name: &str) -> OrderedMergeTree {
    parse_tree(&std::fs::read_to_string(fixture_path(name)).expect("fixture")).expect("valid fixture")
}

pub fn fixture_path(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// Every vertex plus one interior point of every edge, the root edge
/// included.
pub fn sample_points(t: &MergeTree) -> Vec<TreePoint> {
    let mut out = Vec::new();
    for v in t.vertices() {
        let h = t.height(v);
        if h.is_infinite() {
            continue;
        }
        out.push(t.vertex_point(v));
        let up = t.parent(v).map(|p| t.height(p)).unwrap_or(f64::INFINITY);
        let mid = if up.is_finite() { 0.5 * (h + up) } else { h + 0.5 };
        out.push(t.point(v, mid).expect("mid lies above v"));
    }
    out
}

/// Vertex heights, midpoints between them and one height above the top.
pub fn sample_heights(t: &MergeTree) -> Vec<f64> {
    let hs = t.critical_heights();
    let mut out = hs.clone();
    out.extend(hs.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    out.push(hs.last().copied().unwrap_or(0.0) + 1.0);
    out
}
