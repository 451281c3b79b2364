//! Desk-scale training harness that produces stochastic-gradient-noise samples.
//!
//! A fully connected network is trained with constant-learning-rate minibatch
//! SGD on cross-entropy loss. At every checkpoint the harness draws `M` probe
//! minibatches (indices uniform with replacement), records
//! `∇f(w; B_j) − ∇f(w; [n])` for each, and hands the resulting
//! [`NoiseMatrix`](crate::projection::NoiseMatrix) to the projection battery.

mod dataset;
mod model;
mod train;

pub use dataset::{load_idx, parse_idx_images, parse_idx_labels, synth_blobs, Dataset};
pub use model::{init_model, loss_and_grad, sgd_step, Activation, Evaluation, ModelState};
pub use train::{
    extract_sgn, extract_sgn_with, train_and_probe, Checkpoint, ProbeConfig, ProbeSampling, TrainConfig,
    TrainRun,
};
