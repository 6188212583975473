//! Monotone interleaving distance between ordered merge trees.
//!
//! The distance is computed as the Fréchet distance between the 1D curves
//! traced by in-order walks of the two trees. Certificates can be produced
//! and checked in three equivalent forms: interleavings, δ-good maps and
//! monotone labellings.

// `!(x < y)` comparisons deliberately treat NaN as failing the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curves;
pub mod frechet;
pub mod interleaving;
pub mod io;
pub mod oracle;
pub mod ordering;
pub mod synth;
pub mod tree;

pub mod cli;

pub use curves::{in_order_walk, Curve1D, CurveTrace};
pub use frechet::{compute_frechet, decide_frechet, extract_matching, Matching};
pub use interleaving::{monotone_interleaving_distance, DistanceCertificate, ShiftMap};
pub use ordering::{LeafOrder, OrderedMergeTree};
pub use tree::{MergeTree, TreeBuilder, TreePoint, VertexId};
