//! A small convolutional classifier over density matrices: 3x3 same-padded
//! convolutions, 2x2 max-pooling, dense layers and a softmax (3 classes) or
//! logistic (2 classes) output, trained by minibatch SGD with momentum on
//! mean cross-entropy.
//!
//! Parameters live in one flat vector per network; per-sample gradients are
//! computed independently (optionally in parallel) and reduced in input order.

mod arch;
mod gradcheck;
mod kernels;
mod model_io;
mod network;
mod scalar;
mod train;

pub use arch::{default_arch, Activation, LayerSpec};
pub use gradcheck::{gradcheck, gradcheck_arch, ArrayCheck, GradcheckOptions, GradcheckReport};
pub use model_io::{decode, encode, load_model, save_model, FORMAT_VERSION, MAGIC, VERSION_OFFSET};
pub use network::{argmax, loss, probabilities, ModelMeta, Network, Prediction, Task, PROB_FLOOR};
pub use scalar::Scalar;
pub use train::{train, EpochStats, Sample, TrainConfig};

#[cfg(test)]
mod tests;
