//! Symmetric α-stable variables S(α, 0, 1, 0).
//!
//! Sampling uses the Chambers–Mallows–Stuck transform of a uniform angle
//! `V ~ U(-π/2, π/2)` and a unit exponential `W`:
//!
//! ```text
//! α ≠ 1:  X = sin(αV) / cos(V)^{1/α} · (cos(V − αV) / W)^{(1−α)/α}
//! α = 1:  X = tan(V)
//! ```
//!
//! The scale convention is the 1-parameterization, so `S(2, 0, 1, 0)` is
//! `N(0, 2)` rather than the standard normal, and `S(1, 0, 1, 0)` is the
//! standard Cauchy law.

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Parameters of a symmetric, centered, unit-scale stable law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    alpha: f64,
}

impl StableParams {
    pub fn symmetric(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::param(format!("stability parameter must lie in (0, 2], got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Skewness; always 0.
    pub fn beta(&self) -> f64 {
        0.0
    }

    /// Scale; always 1.
    pub fn gamma(&self) -> f64 {
        1.0
    }

    /// Location; always 0.
    pub fn delta(&self) -> f64 {
        0.0
    }

    /// Draws one variate.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // open interval keeps V away from ±π/2
        let u: f64 = rng.sample(Open01);
        let v = std::f64::consts::PI * (u - 0.5);
        if self.alpha == 1.0 {
            return v.tan();
        }
        let e: f64 = rng.sample(Open01);
        let w = -e.ln();
        let a = self.alpha;
        (a * v).sin() / v.cos().powf(1.0 / a) * ((v - a * v).cos() / w).powf((1.0 - a) / a)
    }

    /// Fills `out` with i.i.d. draws.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for x in out {
            *x = self.draw(rng);
        }
    }
}

/// `n` i.i.d. draws from S(α, 0, 1, 0), deterministic in `seed`.
pub fn sample_sas(params: StableParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::param("sample count must be at least 1"));
    }
    let mut rng = rng::stream(seed, 0);
    let mut out = vec![0.0; n];
    params.fill(&mut rng, &mut out);
    Ok(out)
}

/// The scale `c` for which `a·X₁ + b·X₂` has the law of `c·X`: `(a^α + b^α)^{1/α}`.
pub fn stability_scale(a: f64, b: f64, alpha: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::param(format!("scale factors must be positive, got a={a}, b={b}")));
    }
    let alpha = StableParams::symmetric(alpha)?.alpha;
    Ok((a.powf(alpha) + b.powf(alpha)).powf(1.0 / alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quantile(sorted: &[f64], q: f64) -> f64 {
        sorted[((sorted.len() as f64 - 1.0) * q).round() as usize]
    }

    #[test]
    fn rejects_out_of_range_alpha() {
        for a in [0.0, -1.0, 2.0001, f64::NAN] {
            assert!(matches!(StableParams::symmetric(a), Err(Error::Parameter(_))));
        }
        assert!(StableParams::symmetric(2.0).is_ok());
        assert!(StableParams::symmetric(1e-3).is_ok());
    }

    #[test]
    fn zero_count_rejected() {
        let p = StableParams::symmetric(1.5).unwrap();
        assert!(sample_sas(p, 0, 1).is_err());
    }

    #[test]
    fn stability_scale_examples() {
        assert!((stability_scale(1.0, 1.0, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((stability_scale(1.0, 1.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((stability_scale(3.0, 4.0, 2.0).unwrap() - 5.0).abs() < 1e-14);
        assert!(stability_scale(0.0, 1.0, 1.0).is_err());
        assert!(stability_scale(1.0, -2.0, 1.0).is_err());
    }

    #[test]
    fn cauchy_quartiles() {
        let p = StableParams::symmetric(1.0).unwrap();
        let mut x = sample_sas(p, 200_000, 3).unwrap();
        x.sort_by(f64::total_cmp);
        // quartile standard error for the Cauchy law at n = 2e5 is about 0.0044
        assert!((quantile(&x, 0.25) + 1.0).abs() < 0.02);
        assert!((quantile(&x, 0.75) - 1.0).abs() < 0.02);
    }

    #[test]
    fn deterministic_in_seed() {
        let p = StableParams::symmetric(0.7).unwrap();
        let a = sample_sas(p, 1000, 9).unwrap();
        let b = sample_sas(p, 1000, 9).unwrap();
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_ne!(a, sample_sas(p, 1000, 10).unwrap());
    }

    #[test]
    fn alpha_two_has_variance_two() {
        let p = StableParams::symmetric(2.0).unwrap();
        let n = 400_000;
        let x = sample_sas(p, n, 5).unwrap();
        let mean = x.iter().sum::<f64>() / n as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // sd of the sample variance of N(0, 2): 2·sqrt(2/n)
        let mc_sd = 2.0 * (2.0 / n as f64).sqrt();
        assert!((var - 2.0).abs() < 5.0 * mc_sd, "var = {var}");
    }
}
