//! Pair samples and their normalized empirical joint density matrices.
//!
//! A pair `(x, y)` of equal-length observation vectors is binned into a
//! `K x K` histogram over a per-pair uniform grid (rows index x bins,
//! columns index y bins), divided by the observation count, and finally
//! scaled so its largest entry is exactly 1. These matrices are the images
//! the classifier in [`crate::net`] consumes.

mod grid;
mod matrix;
mod pair;

pub use grid::{compute_bin_edges, BinGrid};
pub use matrix::{
    augment_with_transposes, build_dataset, build_dataset_with, build_epdf, build_nepdf, normalize,
    transpose_nepdf, LabeledNepdf, NepdfMatrix, NepdfOptions, DEFAULT_K,
};
pub use pair::{clean_pair, Label, PairSample};
