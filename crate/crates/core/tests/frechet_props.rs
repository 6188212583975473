mod common;

use common::{pair, rng};
use mitree::frechet::{compute_frechet, decide_frechet, extract_matching, FrechetError};
use mitree::oracle::discrete_frechet_refined;
use mitree::synth::HeightStyle;
use mitree::{in_order_walk, Curve1D};
use proptest::prelude::*;
use rand::Rng;

const INF: f64 = f64::INFINITY;

fn curve(h: &[f64]) -> Curve1D {
    Curve1D::new(h.to_vec()).unwrap()
}

fn reversed(c: &Curve1D) -> Curve1D {
    curve(&c.heights().iter().rev().copied().collect::<Vec<_>>())
}

/// Curves of two random trees.
fn curves(seed: u64, max_leaves: usize, style: HeightStyle) -> (Curve1D, Curve1D) {
    let (a, b) = pair(seed, max_leaves, style);
    (in_order_walk(&a).1, in_order_walk(&b).1)
}

#[test]
fn swapped_minima_are_one_apart() {
    let p = curve(&[INF, 0.0, 3.0, 1.0, INF]);
    let q = curve(&[INF, 1.0, 3.0, 0.0, INF]);
    assert!(!decide_frechet(&p, &q, 0.99).unwrap());
    assert!(decide_frechet(&p, &q, 1.0).unwrap());
    assert_eq!(compute_frechet(&p, &q).0, 1.0);
}

#[test]
fn flattening_a_dip_costs_half_its_depth() {
    // the bump 0 -> 5 -> 2 has to be squeezed onto the single minimum at 1
    let p = curve(&[INF, 0.0, 5.0, 2.0, INF]);
    let q = curve(&[INF, 1.0, INF]);
    assert_eq!(compute_frechet(&p, &q).0, 1.5);
    assert!(!decide_frechet(&p, &q, 1.49).unwrap());
}

#[test]
fn single_minima_differ_by_their_heights() {
    assert_eq!(
        compute_frechet(&curve(&[INF, 0.0, INF]), &curve(&[INF, 5.0, INF])).0,
        5.0
    );
}

#[test]
fn bad_thresholds_are_rejected() {
    let p = curve(&[INF, 0.0, INF]);
    assert_eq!(
        decide_frechet(&p, &p, -1.0),
        Err(FrechetError::NegativeDelta(-1.0))
    );
    assert_eq!(decide_frechet(&p, &p, f64::NAN), Err(FrechetError::NanDelta));
    let q = curve(&[INF, 3.0, INF]);
    assert_eq!(extract_matching(&p, &q, 2.0), Err(FrechetError::Infeasible(2.0)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn shifting_a_curve_costs_the_shift(seed in any::<u64>(), c in -3.0f64..3.0) {
        let (p, _) = curves(seed, 10, HeightStyle::Continuous);
        let d = compute_frechet(&p, &p.shifted(c)).0;
        prop_assert!((d - c.abs()).abs() <= 1e-9, "{} vs {}", d, c);
    }

    #[test]
    fn decision_is_monotone_in_delta(seed in any::<u64>()) {
        let (p, q) = curves(seed, 8, HeightStyle::Continuous);
        let mut r = rng(seed);
        let mut ds: Vec<f64> = (0..12).map(|_| r.random::<f64>() * 1.5).collect();
        ds.sort_by(f64::total_cmp);
        let verdicts: Vec<bool> = ds.iter().map(|&d| decide_frechet(&p, &q, d).unwrap()).collect();
        prop_assert!(verdicts.windows(2).all(|w| w[0] <= w[1]), "{:?} at {:?}", verdicts, ds);
    }

    #[test]
    fn decision_flips_at_the_distance(seed in any::<u64>()) {
        let (p, q) = curves(seed, 10, HeightStyle::Continuous);
        let (d, _) = compute_frechet(&p, &q);
        prop_assert!(decide_frechet(&p, &q, d).unwrap());
        if d > 1e-6 {
            prop_assert!(!decide_frechet(&p, &q, d - 1e-6).unwrap());
        }
    }

    #[test]
    fn matching_is_monotone_and_attains_the_distance(seed in any::<u64>()) {
        let (p, q) = curves(seed, 10, HeightStyle::Dyadic);
        let (d, m) = compute_frechet(&p, &q);
        let pts = m.points();
        prop_assert_eq!((pts[0].p, pts[0].q), (0.0, 0.0));
        let last = pts[pts.len() - 1];
        prop_assert_eq!((last.p, last.q), (1.0, 1.0));
        prop_assert!(pts.windows(2).all(|w| w[0].p <= w[1].p && w[0].q <= w[1].q));
        prop_assert!(m.cost(&p, &q) <= d + 1e-9);
    }

    #[test]
    fn distance_is_symmetric_and_reversal_invariant(seed in any::<u64>()) {
        let (p, q) = curves(seed, 10, HeightStyle::Continuous);
        let d = compute_frechet(&p, &q).0;
        prop_assert_eq!(d, compute_frechet(&q, &p).0);
        prop_assert_eq!(d, compute_frechet(&reversed(&p), &reversed(&q)).0);
        prop_assert_eq!(compute_frechet(&p, &p).0, 0.0);
    }

    #[test]
    fn triangle_inequality(seed in any::<u64>()) {
        let (p, q) = curves(seed, 8, HeightStyle::Continuous);
        let (r, _) = curves(seed.wrapping_mul(31).wrapping_add(7), 8, HeightStyle::Continuous);
        let (pq, qr, pr) = (compute_frechet(&p, &q).0, compute_frechet(&q, &r).0, compute_frechet(&p, &r).0);
        prop_assert!(pr <= pq + qr + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn discrete_oracle_brackets_the_distance(seed in any::<u64>()) {
        let (p, q) = curves(seed, 6, HeightStyle::Continuous);
        let d = compute_frechet(&p, &q).0;
        for r in [0.1, 0.01] {
            let disc = discrete_frechet_refined(&p, &q, r).unwrap();
            prop_assert!(d <= disc + 1e-9, "continuous {} above discrete {}", d, disc);
            prop_assert!(disc <= d + r + 1e-9, "discrete {} at resolution {} vs {}", disc, r, d);
        }
    }
}
