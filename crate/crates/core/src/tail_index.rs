//! Block-sum log-moment estimator of the stability index α.
//!
//! Split `n = k1·k2` samples into `k2` consecutive blocks of length `k1` and let
//! `Y_j` be the sum of block `j`. If the samples are i.i.d. SαS then
//! `Y_j ~ k1^{1/α} X`, which gives
//!
//! ```text
//! 1/α̂ = ( mean_j log|Y_j| − mean_i log|X_i| ) / log k1
//! ```
//!
//! The estimate is only meaningful when the samples really are i.i.d. stable.
//! Applied to data that is not stable, or to the flattened coordinates of
//! dependent vectors, it still returns a number; see
//! [`estimate_alpha_on_noise`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projection::NoiseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailIndexEstimate {
    /// Estimate clamped to (0, 2].
    pub alpha_hat: f64,
    /// Unclamped estimate; `inf` when the log-moment difference is exactly zero.
    pub raw_alpha: f64,
    /// The raw estimate fell outside (0, 2].
    pub out_of_range: bool,
    /// Every sample had the same value, so the estimate carries no information.
    pub constant_input: bool,
    pub k1: usize,
    pub k2: usize,
    pub n: usize,
}

/// Default block length: the divisor `d ≥ 2` of `n` closest to `⌊√n⌋`, ties
/// going to the smaller divisor. Primes fall back to `n` itself.
pub fn default_block_len(n: usize) -> Option<usize> {
    if n < 2 {
        return None;
    }
    let root = (n as f64).sqrt().floor() as usize;
    let best = (2..=n)
        .filter(|d| n.is_multiple_of(*d))
        .min_by_key(|&d| (d.abs_diff(root), d))
        .unwrap_or(n);
    Some(best)
}

pub fn estimate_alpha(samples: &[f64], k1: usize) -> Result<TailIndexEstimate> {
    let n = samples.len();
    if k1 < 2 {
        return Err(Error::param(format!("block length must be at least 2, got {k1}")));
    }
    if n == 0 || !n.is_multiple_of(k1) {
        return Err(Error::param(format!("block length {k1} does not divide sample count {n}")));
    }
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::param(format!("non-finite sample at index {i}")));
    }
    if let Some(i) = samples.iter().position(|&v| v == 0.0) {
        return Err(Error::Degenerate(format!("sample {i} is exactly zero")));
    }
    let k2 = n / k1;
    let mut block_log_sum = 0.0;
    for (j, block) in samples.chunks_exact(k1).enumerate() {
        let y: f64 = block.iter().sum();
        if y == 0.0 {
            return Err(Error::Degenerate(format!("block {j} sums to exactly zero")));
        }
        block_log_sum += y.abs().ln();
    }
    let sample_log_sum: f64 = samples.iter().map(|v| v.abs().ln()).sum();
    let inv_alpha = (block_log_sum / k2 as f64 - sample_log_sum / n as f64) / (k1 as f64).ln();
    let raw_alpha = 1.0 / inv_alpha;
    let out_of_range = !(raw_alpha > 0.0 && raw_alpha <= 2.0);
    let alpha_hat = if out_of_range {
        if raw_alpha > 2.0 { 2.0 } else { f64::MIN_POSITIVE }
    } else {
        raw_alpha
    };
    let constant_input = samples.iter().all(|&v| v == samples[0]);
    Ok(TailIndexEstimate { alpha_hat, raw_alpha, out_of_range, constant_input, k1, k2, n })
}

/// Treats all `M·p` noise entries, row-major, as one i.i.d. scalar sample.
///
/// This mirrors the practice of estimating α from flattened SGN coordinates.
/// Dependence between coordinates of one vector biases the estimate even when
/// every coordinate is marginally Gaussian.
pub fn estimate_alpha_on_noise(noise: &NoiseMatrix, k1: usize) -> Result<TailIndexEstimate> {
    estimate_alpha(noise.data(), k1)
}
