//! The three simulation experiments and their output files.
//!
//! * [`noise`]: how much `cosΘ` of a Gaussian triplet moves under additive noise.
//! * [`align`]: trains three encoders on random data and dumps embeddings
//!   before and after, with a 2-D [`pca`] projection.
//! * [`bench`]: wall-clock cost of the GHA loss against the pairwise Dual loss.
//!
//! [`output`] writes every result as CSV/JSON with a metadata header.

pub mod align;
pub mod bench;
pub mod noise;
pub mod output;
pub mod pca;
