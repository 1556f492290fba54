//! Joint generalized cosine similarity (JGCS) for n ≥ 2 feature vectors.
//!
//! The similarity of an n-tuple is `cos Θ`, where `sin Θ` is the volume of the
//! parallelotope spanned by the vectors divided by the product of their norms.
//! The volume comes from the Gram determinant, so the measure is defined for any
//! number of vectors and reduces to `|cos θ|` for two.
//!
//! On top of the similarity the crate provides the GHA contrastive loss
//! (an InfoNCE objective over n-tuples plus an angular-equilibrium regularizer),
//! a pairwise InfoNCE baseline, a small hand-written MLP trainer, and the
//! simulation experiments in [`harness`].
//!
//! Batch-level work is data-parallel through [`Exec`]. Building without the
//! default `parallel` feature removes the rayon dependency and every
//! [`Exec::Parallel`] call runs sequentially. Both modes produce bit-identical
//! results because cross-item reductions always run in index order.

pub mod data;
pub mod error;
pub mod exec;
pub mod gradcheck;
pub mod harness;
pub mod linalg;
pub mod losses;
pub mod nn;
pub mod rng;
pub mod similarity;
pub mod stats;

pub use error::{Error, Result};
pub use exec::Exec;
pub use linalg::{Matrix, SymMatrix};
pub use similarity::{FeatureTuple, SimilarityResult};

/// Crate version, embedded in every output file header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
