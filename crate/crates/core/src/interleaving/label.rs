//! Labelled merge trees: label maps, induced matrices and the label
//! distance.

use std::cmp::Ordering;

use crate::ordering::OrderedMergeTree;
use crate::tree::{MergeTree, TreePoint};

use super::{compare_approx, lift, CertificateError, ShiftMap, Tolerance};

/// Two label maps `π: [n] → T` and `π': [n] → T'`.
#[derive(Clone, Debug, PartialEq)]
pub struct Labelling {
    pi: Vec<TreePoint>,
    pi_prime: Vec<TreePoint>,
}

fn covers_leaves(t: &MergeTree, pts: &[TreePoint]) -> Result<(), CertificateError> {
    for p in pts {
        let ok = p.edge().index() < t.len()
            && t.height(p.edge()) <= p.height()
            && t.parent(p.edge())
                .map_or(p.is_root(), |q| p.height() < t.height(q));
        if !ok {
            return Err(CertificateError::BadLabelling(format!(
                "{p} is not a point of the tree"
            )));
        }
    }
    match t.leaves().iter().find(|&&u| !pts.contains(&t.vertex_point(u))) {
        Some(u) => Err(CertificateError::BadLabelling(format!(
            "leaf {} carries no label",
            t.name(*u)
        ))),
        None => Ok(()),
    }
}

impl Labelling {
    /// Checks equal lengths and that every leaf on both sides carries a label.
    pub fn new(
        src: &OrderedMergeTree,
        tgt: &OrderedMergeTree,
        pi: Vec<TreePoint>,
        pi_prime: Vec<TreePoint>,
    ) -> Result<Labelling, CertificateError> {
        if pi.len() != pi_prime.len() {
            return Err(CertificateError::BadLabelling(format!(
                "{} labels on the source, {} on the target",
                pi.len(),
                pi_prime.len()
            )));
        }
        covers_leaves(src.tree(), &pi)?;
        covers_leaves(tgt.tree(), &pi_prime)?;
        Ok(Labelling { pi, pi_prime })
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn pi(&self) -> &[TreePoint] {
        &self.pi
    }

    pub fn pi_prime(&self) -> &[TreePoint] {
        &self.pi_prime
    }

    pub fn matrix_src(&self, src: &OrderedMergeTree) -> Matrix {
        induced_matrix(src.tree(), &self.pi)
    }

    pub fn matrix_tgt(&self, tgt: &OrderedMergeTree) -> Matrix {
        induced_matrix(tgt.tree(), &self.pi_prime)
    }

    /// Distance between the two induced matrices.
    pub fn distance(&self, src: &OrderedMergeTree, tgt: &OrderedMergeTree) -> f64 {
        label_distance(&self.matrix_src(src), &self.matrix_tgt(tgt)).expect("equal sizes")
    }
}

/// Square matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Matrix, CertificateError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(CertificateError::BadLabelling("matrix is not square".into()));
        }
        Ok(Matrix {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1))
    }
}

/// `M[i][j]` is the height of the lca of the `i`-th and `j`-th labelled points.
pub fn induced_matrix(t: &MergeTree, labels: &[TreePoint]) -> Matrix {
    let n = labels.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        data[i * n + i] = labels[i].height();
        for j in i + 1..n {
            let h = t.lca(&labels[i], &labels[j]).height();
            data[i * n + j] = h;
            data[j * n + i] = h;
        }
    }
    Matrix { n, data }
}

/// Largest entrywise difference.
pub fn label_distance(m: &Matrix, m2: &Matrix) -> Result<f64, CertificateError> {
    if m.n != m2.n {
        return Err(CertificateError::BadLabelling(format!(
            "matrix sizes {} and {} differ",
            m.n, m2.n
        )));
    }
    Ok(m.data
        .iter()
        .zip(&m2.data)
        .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() })
        .fold(0.0, f64::max))
}

/// Labels strictly ordered in the source must not be reversed in the target.
pub fn check_monotone_labelling(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    lab: &Labelling,
) -> Result<(), CertificateError> {
    let tol = Tolerance::for_trees(src.tree(), tgt.tree(), 0.0);
    let n = lab.len();
    for i in 0..n {
        for j in 0..n {
            if i != j
                && compare_approx(src, &lab.pi[i], &lab.pi[j], tol) == Ordering::Less
                && compare_approx(tgt, &lab.pi_prime[i], &lab.pi_prime[j], tol) == Ordering::Greater
            {
                return Err(CertificateError::LabelOrder(i, j));
            }
        }
    }
    Ok(())
}

/// The interleaving sending each point `δ` above the partner of any label
/// below it.
pub fn labelling_to_interleaving(
    src: &OrderedMergeTree,
    tgt: &OrderedMergeTree,
    lab: &Labelling,
    delta: f64,
) -> Result<(ShiftMap, ShiftMap), CertificateError> {
    if delta.is_nan() || delta < 0.0 {
        return Err(CertificateError::BadDelta(delta));
    }
    let tol = Tolerance::for_trees(src.tree(), tgt.tree(), delta);
    let found = lab.distance(src, tgt);
    if found > delta + tol.0 {
        return Err(CertificateError::LabelDistance { found, delta });
    }
    let side = |from: &MergeTree, to: &MergeTree, mine: &[TreePoint], theirs: &[TreePoint]| {
        from.leaves()
            .iter()
            .map(|&u| {
                let at = from.vertex_point(u);
                let l = mine.iter().position(|p| *p == at).expect("leaves are covered");
                Ok((u, lift(to, &theirs[l], from.height(u) + delta, tol)?))
            })
            .collect::<Result<Vec<_>, CertificateError>>()
    };
    let alpha = side(src.tree(), tgt.tree(), &lab.pi, &lab.pi_prime)?;
    let beta = side(tgt.tree(), src.tree(), &lab.pi_prime, &lab.pi)?;
    Ok((ShiftMap::new(delta, alpha), ShiftMap::new(delta, beta)))
}
