//! Neighbor-embedded probability density features, simulators and a small
//! convolutional classifier for pairwise causal direction.

pub mod error;
pub mod eval;
pub mod exec;
pub mod nepdf;
pub mod net;
pub mod rng;
pub mod simgen;

pub use error::{Error, Result};
pub use exec::Exec;
