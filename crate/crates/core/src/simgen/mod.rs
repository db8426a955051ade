//! Labeled pair generators: three lagged structural equation models over
//! `(X, Y, Z)` and spline-mechanism cause-effect pairs.

mod sem;
mod spline;
mod synth;

pub use sem::{
    label_pairs, simulate, simulate_chain, simulate_reverse_v, simulate_systems, simulate_v, SemParams, StepNoise,
    Structure, TripleSeries,
};
pub use spline::{hermite_spline, HermiteSpline};
pub use synth::{
    apply_mechanism, gen_synthetic_pairs, gen_synthetic_pairs_with, identity_mechanism, random_mechanism,
    sample_cause, SynthPairConfig, KNOTS,
};
