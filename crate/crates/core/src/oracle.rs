//! Brute-force references and the balanced-partition reduction trees.
//!
//! Nothing here calls into the Fréchet engine: the discrete distance has
//! its own capping and its own dynamic program.

use itertools::Itertools;
use rayon::prelude::*;
use thiserror::Error;

use crate::curves::Curve1D;
use crate::interleaving::distance_value;
use crate::ordering::OrderedMergeTree;
use crate::tree::{MergeTree, TreeBuilder, TreeError, VertexId};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum OracleError {
    #[error("tree has {found} leaves, more than the budget of {budget}")]
    OverBudget { found: usize, budget: usize },
    #[error("resolution must be positive, got {0}")]
    BadResolution(f64),
    #[error("partition instance: {0}")]
    BadInstance(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Default leaf budget for order enumeration.
pub const DEFAULT_MAX_LEAVES: usize = 8;

/// Discrete Fréchet distance after resampling every segment so consecutive
/// samples differ by at most `resolution` in height. The infinite ends are
/// replaced by a height above everything, shared by both curves.
pub fn discrete_frechet_refined(p: &Curve1D, q: &Curve1D, resolution: f64) -> Result<f64, OracleError> {
    if !(resolution > 0.0) {
        return Err(OracleError::BadResolution(resolution));
    }
    let finite: Vec<f64> = p
        .heights()
        .iter()
        .chain(q.heights())
        .copied()
        .filter(|h| h.is_finite())
        .collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let top = if finite.is_empty() {
        0.0
    } else {
        hi + 2.0 * (hi - lo) + 1.0
    };
    let resample = |c: &Curve1D| -> Vec<f64> {
        let hs: Vec<f64> = c
            .heights()
            .iter()
            .map(|&h| if h.is_finite() { h } else { top })
            .collect();
        let mut out = vec![hs[0]];
        for (&a, &b) in hs.iter().tuple_windows() {
            let pieces = ((b - a).abs() / resolution).ceil().max(1.0) as usize;
            out.extend((1..=pieces).map(|k| a + (b - a) * k as f64 / pieces as f64));
        }
        out
    };
    let (a, b) = (resample(p), resample(q));
    // rolling rows of the coupling recurrence
    let mut prev = vec![f64::INFINITY; b.len()];
    let mut cur = vec![0.0; b.len()];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            let here = (x - y).abs();
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => cur[j - 1],
                (_, 0) => prev[0],
                _ => prev[j].min(prev[j - 1]).min(cur[j - 1]),
            };
            cur[j] = here.max(best);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[b.len() - 1])
}

/// Every ordering of `t` obtained by permuting children lists.
fn all_orders(t: &MergeTree) -> Vec<OrderedMergeTree> {
    let choices: Vec<Vec<Vec<VertexId>>> = t
        .vertices()
        .map(|v| {
            let ch = t.children(v);
            ch.iter().copied().permutations(ch.len()).collect()
        })
        .collect();
    choices
        .into_iter()
        .multi_cartesian_product()
        .map(|children| OrderedMergeTree::from_tree(t.with_children(children)).expect("permuted children"))
        .collect()
}

/// Smallest monotone interleaving distance over all pairs of leaf orders.
pub fn brute_force_min_over_orders(
    t: &MergeTree,
    t2: &MergeTree,
    max_leaves: usize,
) -> Result<f64, OracleError> {
    distances_over_orders(t, t2, max_leaves).map(|ds| ds.into_iter().fold(f64::INFINITY, f64::min))
}

/// Monotone distances for every pair of leaf orders.
pub fn distances_over_orders(
    t: &MergeTree,
    t2: &MergeTree,
    max_leaves: usize,
) -> Result<Vec<f64>, OracleError> {
    for tree in [t, t2] {
        let found = tree.leaves().len();
        if found > max_leaves {
            return Err(OracleError::OverBudget {
                found,
                budget: max_leaves,
            });
        }
    }
    let a = all_orders(t);
    let b = all_orders(t2);
    Ok(a.par_iter()
        .flat_map_iter(|x| b.iter().map(move |y| distance_value(x, y)))
        .collect())
}

/// A balanced-partition instance.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionInstance {
    values: Vec<u64>,
    m: u64,
    lambda: f64,
}

impl PartitionInstance {
    pub const DEFAULT_LAMBDA: f64 = 9.0;

    pub fn new(values: Vec<u64>, m: u64, lambda: f64) -> Result<Self, OracleError> {
        if values.is_empty() || values.contains(&0) {
            return Err(OracleError::BadInstance("values must be positive".into()));
        }
        if m < 2 {
            return Err(OracleError::BadInstance("m must be at least 2".into()));
        }
        if !(lambda > 8.0) || !lambda.is_finite() {
            return Err(OracleError::BadInstance(format!(
                "lambda must exceed 8, got {lambda}"
            )));
        }
        if values.iter().sum::<u64>() % m != 0 {
            return Err(OracleError::BadInstance("sum is not divisible by m".into()));
        }
        Ok(PartitionInstance { values, m, lambda })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Target sum of every part.
    pub fn mu(&self) -> u64 {
        self.values.iter().sum::<u64>() / self.m
    }
}

/// The two reduction trees, with degree-1 vertices contracted.
pub fn build_partition_reduction(inst: &PartitionInstance) -> Result<(MergeTree, MergeTree), OracleError> {
    let l = inst.lambda;
    let mut b = TreeBuilder::new();
    let mut tops = Vec::new();
    for (i, &a) in inst.values.iter().enumerate() {
        let leaves: Vec<VertexId> = (0..a).map(|k| b.leaf(format!("u{i}_{k}"), 0.0)).collect();
        let p_hat = b.merge(format!("p_hat{i}"), l, &leaves)?;
        tops.push(b.merge(format!("p{i}"), l + 1.0, &[p_hat])?);
    }
    let r = b.merge("r", l + 2.0, &tops)?;
    b.root(r)?;
    let t = b.build_unchecked()?.normalised();

    let mut b = TreeBuilder::new();
    let mut groups = Vec::new();
    for j in 0..inst.m {
        let leaves: Vec<VertexId> = (0..inst.mu()).map(|k| b.leaf(format!("w{j}_{k}"), 1.0)).collect();
        groups.push(b.merge(format!("q{j}"), l + 1.0, &leaves)?);
    }
    let r2 = b.merge("r'", l + 3.0, &groups)?;
    b.root(r2)?;
    let t2 = b.build_unchecked()?.normalised();
    crate::tree::validate_tree(&t).map_err(TreeError::from)?;
    crate::tree::validate_tree(&t2).map_err(TreeError::from)?;
    Ok((t, t2))
}
