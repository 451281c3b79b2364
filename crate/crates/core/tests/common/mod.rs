#![allow(dead_code)]

use serde::Deserialize;

#[derive(Debug, Deserialize)]
pub struct ReferenceSample {
    pub name: String,
    pub values: Vec<f64>,
    pub w: f64,
    pub p: f64,
    pub a2: f64,
}

#[derive(Debug, Deserialize)]
pub struct Reference {
    pub battery: Vec<ReferenceSample>,
    pub examples: std::collections::HashMap<String, ReferenceSample>,
}

/// scipy outputs on fixed samples; regenerate with `tests/fixtures/gen_reference.py`.
pub fn reference() -> Reference {
    let text = include_str!("../fixtures/normality_reference.json");
    serde_json::from_str(text).expect("reference fixture parses")
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Critical value of the two-sample KS statistic at level 0.01 (asymptotic).
pub fn ks_two_sample_critical_01(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

/// One-sample KS statistic against a continuous CDF.
pub fn ks_one_sample(x: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = x.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
