//! Scalar Gaussianity tests: Shapiro–Wilk (Royston's AS R94) and
//! Anderson–Darling for the composite normal case.
//!
//! Both tests treat the null hypothesis as "i.i.d. Gaussian with unknown mean
//! and variance" and sort their input internally, so results do not depend on
//! sample order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_normal_cdf, normal_quantile, normal_sf};

pub const SHAPIRO_WILK_MIN_N: usize = 3;
pub const SHAPIRO_WILK_MAX_N: usize = 5000;
pub const ANDERSON_DARLING_MIN_N: usize = 8;

/// Outcome of one scalar test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnivariateTestResult {
    /// W for Shapiro–Wilk, A² (uncorrected) for Anderson–Darling.
    pub statistic: f64,
    /// Shapiro–Wilk only.
    pub p_value: Option<f64>,
    /// Anderson–Darling only: A²·(1 + 0.75/n + 2.25/n²).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub adjusted_statistic: Option<f64>,
    /// The Gaussian null hypothesis was not rejected.
    pub accepted: bool,
}

/// Significance levels with tabulated Anderson–Darling critical values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Level {
    P15,
    P10,
    #[default]
    P05,
    P025,
    P01,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::P15, Level::P10, Level::P05, Level::P025, Level::P01];

    pub fn from_alpha(alpha: f64) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| (l.alpha() - alpha).abs() < 1e-12)
            .ok_or_else(|| {
                Error::param(format!(
                    "unsupported significance level {alpha}; expected one of 0.15, 0.10, 0.05, 0.025, 0.01"
                ))
            })
    }

    pub fn alpha(self) -> f64 {
        match self {
            Level::P15 => 0.15,
            Level::P10 => 0.10,
            Level::P05 => 0.05,
            Level::P025 => 0.025,
            Level::P01 => 0.01,
        }
    }

    /// Upper critical value of the adjusted A² statistic, composite normal case
    /// (D'Agostino & Stephens 1986, Table 4.7).
    pub fn ad_critical_value(self) -> f64 {
        match self {
            Level::P15 => 0.561,
            Level::P10 => 0.631,
            Level::P05 => 0.752,
            Level::P025 => 0.873,
            Level::P01 => 1.035,
        }
    }
}

fn sorted_checked(samples: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::param(format!("non-finite sample at index {i}")));
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    if x[0] == x[x.len() - 1] {
        return Err(Error::Degenerate("sample is constant (zero variance)".into()));
    }
    Ok(x)
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Shapiro–Wilk test for a fixed sample size.
///
/// The AS R94 coefficients depend only on `n`, so a battery running many
/// samples of one size builds this once and reuses it.
#[derive(Debug, Clone)]
pub struct ShapiroWilk {
    n: usize,
    /// Full antisymmetric coefficient vector, aligned with the sorted sample.
    coeffs: Vec<f64>,
}

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

impl ShapiroWilk {
    pub fn new(n: usize) -> Result<Self> {
        if !(SHAPIRO_WILK_MIN_N..=SHAPIRO_WILK_MAX_N).contains(&n) {
            return Err(Error::SampleSize { n, min: SHAPIRO_WILK_MIN_N, max: SHAPIRO_WILK_MAX_N });
        }
        let half = n / 2;
        // a[i] for i in 0..half are the upper-half weights, largest first.
        let mut a = vec![0.0; half];
        if n == 3 {
            a[0] = std::f64::consts::FRAC_1_SQRT_2;
        } else {
            let an = n as f64;
            let m: Vec<f64> = (1..=half).map(|i| -normal_quantile((i as f64 - 0.375) / (an + 0.25))).collect();
            let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
            let ssumm2 = summ2.sqrt();
            let rsn = 1.0 / an.sqrt();
            let a1 = poly(&C1, rsn) + m[0] / ssumm2;
            let (first, fac) = if n > 5 {
                let a2 = m[1] / ssumm2 + poly(&C2, rsn);
                let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
                    / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
                    .sqrt();
                a[1] = a2;
                (2, fac)
            } else {
                let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
                (1, fac)
            };
            a[0] = a1;
            for i in first..half {
                a[i] = m[i] / fac;
            }
        }
        let mut coeffs = vec![0.0; n];
        for (i, &w) in a.iter().enumerate() {
            coeffs[i] = -w;
            coeffs[n - 1 - i] = w;
        }
        Ok(Self { n, coeffs })
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    /// Runs the test; `level` only decides `accepted` (p ≥ level).
    pub fn test(&self, samples: &[f64], level: f64) -> Result<UnivariateTestResult> {
        if samples.len() != self.n {
            return Err(Error::Shape(format!("expected {} samples, got {}", self.n, samples.len())));
        }
        let x = sorted_checked(samples)?;
        let (w, w1) = self.statistic_sorted(&x);
        let p = self.p_value(w, w1);
        Ok(UnivariateTestResult { statistic: w, p_value: Some(p), adjusted_statistic: None, accepted: p >= level })
    }

    /// Returns (W, 1 − W) with the complement computed directly.
    fn statistic_sorted(&self, x: &[f64]) -> (f64, f64) {
        let n = self.n as f64;
        let range = x[x.len() - 1] - x[0];
        let xs: Vec<f64> = x.iter().map(|v| v / range).collect();
        let sx = xs.iter().sum::<f64>() / n;
        let sa = self.coeffs.iter().sum::<f64>() / n;
        let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
        for (&a, &v) in self.coeffs.iter().zip(&xs) {
            let da = a - sa;
            let dx = v - sx;
            ssa += da * da;
            ssx += dx * dx;
            sax += da * dx;
        }
        let ssassx = (ssa * ssx).sqrt();
        let w1 = ((ssassx - sax) * (ssassx + sax) / (ssa * ssx)).max(0.0);
        ((1.0 - w1).clamp(0.0, 1.0), w1)
    }

    fn p_value(&self, w: f64, w1: f64) -> f64 {
        let n = self.n;
        if n == 3 {
            const SIX_OVER_PI: f64 = 6.0 / std::f64::consts::PI;
            return (SIX_OVER_PI * (w.sqrt().asin() - std::f64::consts::FRAC_PI_3)).clamp(0.0, 1.0);
        }
        if w1 <= 0.0 {
            return 1.0;
        }
        let an = n as f64;
        let y = w1.ln();
        let (y, m, s) = if n <= 11 {
            let gamma = poly(&G, an);
            if y >= gamma {
                return 1e-99;
            }
            (-(gamma - y).ln(), poly(&C3, an), poly(&C4, an).exp())
        } else {
            let ln_n = an.ln();
            (y, poly(&C5, ln_n), poly(&C6, ln_n).exp())
        };
        normal_sf((y - m) / s).clamp(0.0, 1.0)
    }
}

/// Shapiro–Wilk test of `samples` (3 ≤ n ≤ 5000) at significance 0.05.
pub fn shapiro_wilk(samples: &[f64]) -> Result<UnivariateTestResult> {
    shapiro_wilk_at(samples, Level::default().alpha())
}

/// Shapiro–Wilk with an explicit significance level for `accepted`.
pub fn shapiro_wilk_at(samples: &[f64], level: f64) -> Result<UnivariateTestResult> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param(format!("significance level must lie in (0, 1), got {level}")));
    }
    ShapiroWilk::new(samples.len())?.test(samples, level)
}

/// Anderson–Darling test against the normal family with estimated mean and
/// variance.
pub fn anderson_darling(samples: &[f64], level: Level) -> Result<UnivariateTestResult> {
    let n = samples.len();
    if n < ANDERSON_DARLING_MIN_N {
        return Err(Error::SampleSize { n, min: ANDERSON_DARLING_MIN_N, max: usize::MAX });
    }
    let x = sorted_checked(samples)?;
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    if var <= 0.0 || var.is_nan() {
        return Err(Error::Degenerate("sample has zero variance".into()));
    }
    let sd = var.sqrt();
    let z: Vec<f64> = x.iter().map(|v| (v - mean) / sd).collect();
    let mut s = 0.0;
    for i in 0..n {
        // ln(1 − Φ(z)) = ln Φ(−z)
        let weight = (2 * i + 1) as f64;
        s += weight * (ln_normal_cdf(z[i]) + ln_normal_cdf(-z[n - 1 - i]));
    }
    let a2 = -nf - s / nf;
    let adjusted = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    Ok(UnivariateTestResult {
        statistic: a2,
        p_value: None,
        adjusted_statistic: Some(adjusted),
        accepted: adjusted < level.ad_critical_value(),
    })
}
