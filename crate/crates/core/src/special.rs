//! Standard normal distribution helpers.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::distribution::{ContinuousCDF, Normal};
use libm::erfc;

/// Φ(z).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// 1 − Φ(z), computed without cancellation.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// ln Φ(z), finite for every finite `z`.
pub fn ln_normal_cdf(z: f64) -> f64 {
    if z >= 0.0 {
        (-normal_sf(z)).ln_1p()
    } else {
        ln_half_erfc(-z * FRAC_1_SQRT_2)
    }
}

/// ln(½ erfc(x)) for x ≥ 0.
fn ln_half_erfc(x: f64) -> f64 {
    // erfc underflows a little past x = 26.5
    if x < 25.0 {
        (0.5 * erfc(x)).ln()
    } else {
        let x2 = x * x;
        let inv = 1.0 / (2.0 * x2);
        let series = 1.0 - inv + 3.0 * inv * inv - 15.0 * inv * inv * inv;
        -x2 - (x * PI.sqrt()).ln() + series.ln() - std::f64::consts::LN_2
    }
}

/// Φ⁻¹(p) for p in (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-14);
        assert!((normal_sf(8.0) - 6.220960574271785e-16).abs() < 1e-28);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 0.001, 0.025, 0.3, 0.5, 0.8, 0.975, 0.999999] {
            let z = normal_quantile(p);
            assert!((normal_cdf(z) - p).abs() < 1e-12 * p.max(1e-3), "p={p}");
        }
    }

    #[test]
    fn log_cdf_is_continuous_across_branch() {
        let x = 25.0 * std::f64::consts::SQRT_2;
        let below = ln_normal_cdf(-(x - 1e-9));
        let above = ln_normal_cdf(-(x + 1e-9));
        assert!((below - above).abs() < 1e-6);
        // mpmath reference value
        assert!((ln_normal_cdf(-40.0) + 804.6084420137538).abs() < 1e-9);
        assert!(ln_normal_cdf(-1e3).is_finite());
    }

    #[test]
    fn log_cdf_upper_tail() {
        assert!((ln_normal_cdf(10.0) + 7.619853024160527e-24).abs() < 1e-36);
    }
}
