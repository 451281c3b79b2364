//! Gaussianity testing of stochastic gradient noise.
//!
//! The crate extracts stochastic-gradient-noise (SGN) vectors from minibatch
//! SGD on a small fully connected network, projects them onto random unit
//! directions, and runs Shapiro–Wilk and Anderson–Darling tests on every
//! projection. Symmetric α-stable samplers and a block-sum tail-index
//! estimator support sanity sweeps and comparisons against the stable-noise
//! hypothesis.

pub mod error;
pub mod harness;
pub mod projection;
pub mod rng;
pub mod special;
pub mod stable;
pub mod tail_index;
pub mod univariate;

pub use error::{Error, Result};
