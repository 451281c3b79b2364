//! Random-projection Gaussianity battery.
//!
//! Each noise vector is projected onto `k` random unit directions; the `k`
//! resulting scalar samples (one per direction, `M` values each) go through
//! Shapiro–Wilk and Anderson–Darling. The aggregates are compared with the same
//! computation on an `M × p` matrix of i.i.d. standard normal entries projected
//! along the same directions.
//!
//! A vector whose one-dimensional marginals are all Gaussian is multivariate
//! Gaussian, so a strong rejection along any direction rules out the
//! multivariate Gaussian hypothesis. Acceptance along all tested directions
//! only suggests it.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, derive_seed, tags};
use crate::stable::StableParams;
use crate::univariate::{anderson_darling, Level, ShapiroWilk, ANDERSON_DARLING_MIN_N, SHAPIRO_WILK_MAX_N};

/// Row block used for projection; fixed so results never depend on thread count.
const ROW_BLOCK: usize = 64;

/// A directional p-value below this on any direction flags the noise as not
/// multivariate Gaussian.
pub const OVERWHELMING_P: f64 = 1e-6;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseMeta {
    pub iteration: u64,
    pub batch_size: u64,
    pub seed: u64,
}

/// `M` noise vectors of dimension `p`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    pub meta: NoiseMeta,
}

impl NoiseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, meta: NoiseMeta) -> Result<Self> {
        if rows < ANDERSON_DARLING_MIN_N {
            return Err(Error::Shape(format!("need at least {ANDERSON_DARLING_MIN_N} rows, got {rows}")));
        }
        if cols == 0 {
            return Err(Error::Shape("noise vectors must have dimension ≥ 1".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{} values for a {rows}×{cols} matrix", data.len())));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite noise entry at flat index {i}")));
        }
        Ok(Self { rows, cols, data, meta })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: Vec<Vec<f64>>, meta: NoiseMeta) -> Result<Self> {
        let m = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(m, p, rows.concat(), meta)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

/// `k` unit vectors in `R^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    k: usize,
    p: usize,
    vectors: Vec<f64>,
    pub seed: u64,
}

impl DirectionSet {
    /// Wraps caller-supplied directions; rows are normalized to unit length.
    pub fn from_rows(rows: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let k = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if k == 0 || p == 0 || rows.iter().any(|r| r.len() != p) {
            return Err(Error::Shape("directions must be a non-empty rectangular set".into()));
        }
        let mut vectors = rows.concat();
        for row in vectors.chunks_mut(p) {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::param("direction with zero or non-finite norm"));
            }
            row.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(Self { k, p, vectors, seed })
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.p..(j + 1) * self.p]
    }

    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }
}

/// `k` directions uniform on the unit sphere in `R^p`: normalized i.i.d.
/// standard-normal coordinates, one random stream per direction.
pub fn random_directions(p: usize, k: usize, seed: u64) -> Result<DirectionSet> {
    if p == 0 || k == 0 {
        return Err(Error::param(format!("need p ≥ 1 and k ≥ 1, got p={p}, k={k}")));
    }
    let mut vectors = vec![0.0; k * p];
    vectors.par_chunks_mut(p).enumerate().for_each(|(j, row)| {
        let mut rng = rng::stream(seed, j as u64);
        loop {
            for v in row.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
                break;
            }
        }
    });
    Ok(DirectionSet { k, p, vectors, seed })
}

/// Column-major `M × k` projections of `rows` (row-major, `m × p`) onto `dirs`.
/// Entry `(i, j)` lands at `out[j * m + i]`.
fn project_block(rows: &[f64], m: usize, dirs: &DirectionSet, out_block: &mut [f64]) {
    let p = dirs.p;
    let k = dirs.k;
    debug_assert_eq!(rows.len(), m * p);
    debug_assert_eq!(out_block.len(), m * k);
    // out_block is m×k row-major: C = A·Bᵀ with A = rows (m×p), B = dirs (k×p)
    unsafe {
        matrixmultiply::dgemm(
            m,
            p,
            k,
            1.0,
            rows.as_ptr(),
            p as isize,
            1,
            dirs.vectors.as_ptr(),
            1,
            p as isize,
            0.0,
            out_block.as_mut_ptr(),
            k as isize,
            1,
        );
    }
}

/// Projects row-blocks produced by `fill_block(first_row, rows, buf)` and returns
/// `k` samples of length `m`.
fn project_generated<F>(m: usize, dirs: &DirectionSet, fill_block: F) -> Vec<Vec<f64>>
where
    F: Fn(usize, usize, &mut Vec<f64>) + Sync,
{
    let k = dirs.k;
    let blocks: Vec<(usize, Vec<f64>)> = (0..m.div_ceil(ROW_BLOCK))
        .into_par_iter()
        .map_init(Vec::new, |buf, b| {
            let start = b * ROW_BLOCK;
            let len = ROW_BLOCK.min(m - start);
            fill_block(start, len, buf);
            let mut out = vec![0.0; len * k];
            project_block(buf, len, dirs, &mut out);
            (start, out)
        })
        .collect();
    let mut samples = vec![vec![0.0; m]; k];
    for (start, out) in blocks {
        for (r, row) in out.chunks(k).enumerate() {
            for (j, &v) in row.iter().enumerate() {
                samples[j][start + r] = v;
            }
        }
    }
    samples
}

/// Sample `j` holds `⟨noise row i, direction j⟩` for every row `i`.
pub fn project(noise: &NoiseMatrix, dirs: &DirectionSet) -> Result<Vec<Vec<f64>>> {
    if noise.cols != dirs.p {
        return Err(Error::Shape(format!(
            "noise dimension {} does not match direction dimension {}",
            noise.cols, dirs.p
        )));
    }
    let p = noise.cols;
    Ok(project_generated(noise.rows, dirs, |start, len, buf| {
        buf.clear();
        buf.extend_from_slice(&noise.data[start * p..(start + len) * p]);
    }))
}

/// Per-direction aggregates of one set of projected samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub sw_mean_p: f64,
    pub ad_accept_frac: f64,
    pub min_sw_p: f64,
    pub n_tested: usize,
    pub n_degenerate: usize,
}

/// Runs both tests on every sample; degenerate samples are excluded and counted.
pub fn aggregate(samples: &[Vec<f64>], level: Level) -> Result<Aggregates> {
    let m = samples.first().map_or(0, Vec::len);
    let sw = ShapiroWilk::new(m)?;
    let outcomes: Vec<Option<(f64, bool)>> = samples
        .par_iter()
        .map(|s| -> Result<Option<(f64, bool)>> {
            match sw.test(s, level.alpha()) {
                Ok(r) => {
                    let ad = anderson_darling(s, level)?;
                    Ok(Some((r.p_value.unwrap_or(0.0), ad.accepted)))
                }
                Err(Error::Degenerate(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let tested: Vec<(f64, bool)> = outcomes.iter().flatten().copied().collect();
    let n_degenerate = outcomes.len() - tested.len();
    if tested.is_empty() {
        return Err(Error::EmptyBattery(outcomes.len()));
    }
    let n = tested.len() as f64;
    // sequential sums in direction order
    let sw_mean_p = tested.iter().map(|t| t.0).sum::<f64>() / n;
    let accepted = tested.iter().filter(|t| t.1).count();
    let min_sw_p = tested.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
    Ok(Aggregates {
        sw_mean_p,
        ad_accept_frac: accepted as f64 / n,
        min_sw_p,
        n_tested: tested.len(),
        n_degenerate,
    })
}

/// Aggregates of the matched Gaussian baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub rows: usize,
    pub seed: u64,
    pub level: Level,
    pub aggregates: Aggregates,
}

/// Projects an `m × p` matrix of i.i.d. standard normals (row `i` drawn from
/// stream `i` of `seed`) onto `dirs` and aggregates. Depends only on
/// `(m, p, dirs, seed, level)`.
pub fn gaussian_baseline(m: usize, dirs: &DirectionSet, level: Level, seed: u64) -> Result<Baseline> {
    check_rows(m)?;
    let p = dirs.p;
    let samples = project_generated(m, dirs, |start, len, buf| {
        buf.clear();
        buf.resize(len * p, 0.0);
        for (r, row) in buf.chunks_mut(p).enumerate() {
            let mut rng = rng::stream(seed, (start + r) as u64);
            for v in row {
                *v = rng.sample(StandardNormal);
            }
        }
    });
    Ok(Baseline { rows: m, seed, level, aggregates: aggregate(&samples, level)? })
}

fn check_rows(m: usize) -> Result<()> {
    if !(ANDERSON_DARLING_MIN_N..=SHAPIRO_WILK_MAX_N).contains(&m) {
        return Err(Error::SampleSize { n: m, min: ANDERSON_DARLING_MIN_N, max: SHAPIRO_WILK_MAX_N });
    }
    Ok(())
}

/// Battery outcome for one noise sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub iteration: u64,
    pub sw_mean_p: f64,
    pub ad_accept_frac: f64,
    pub baseline_sw_mean_p: f64,
    pub baseline_ad_accept_frac: f64,
    pub level: f64,
    pub n_directions: usize,
    pub n_degenerate: usize,
    /// Smallest Shapiro–Wilk p-value over tested directions.
    pub min_sw_p: f64,
    /// False when some direction rejects with p below [`OVERWHELMING_P`].
    pub gaussian_plausible: bool,
}

/// Runs the battery against a precomputed baseline (reused across checkpoints).
pub fn battery_with_baseline(noise: &NoiseMatrix, dirs: &DirectionSet, baseline: &Baseline) -> Result<ProjectionReport> {
    check_rows(noise.rows)?;
    if baseline.rows != noise.rows {
        return Err(Error::Shape(format!("baseline has {} rows, noise has {}", baseline.rows, noise.rows)));
    }
    let samples = project(noise, dirs)?;
    let agg = aggregate(&samples, baseline.level)?;
    Ok(ProjectionReport {
        iteration: noise.meta.iteration,
        sw_mean_p: agg.sw_mean_p,
        ad_accept_frac: agg.ad_accept_frac,
        baseline_sw_mean_p: baseline.aggregates.sw_mean_p,
        baseline_ad_accept_frac: baseline.aggregates.ad_accept_frac,
        level: baseline.level.alpha(),
        n_directions: dirs.k,
        n_degenerate: agg.n_degenerate,
        min_sw_p: agg.min_sw_p,
        gaussian_plausible: agg.min_sw_p >= OVERWHELMING_P,
    })
}

/// Full battery: the noise aggregates plus a Gaussian baseline from `baseline_seed`.
pub fn battery(noise: &NoiseMatrix, dirs: &DirectionSet, level: Level, baseline_seed: u64) -> Result<ProjectionReport> {
    check_rows(noise.rows)?;
    if noise.cols != dirs.p {
        return Err(Error::Shape(format!("noise dimension {} vs direction dimension {}", noise.cols, dirs.p)));
    }
    let baseline = gaussian_baseline(noise.rows, dirs, level, baseline_seed)?;
    battery_with_baseline(noise, dirs, &baseline)
}

/// Sweep parameters for the symmetric α-stable sanity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub rows: usize,
    pub dim: usize,
    pub directions: usize,
    pub level: Level,
    pub seed: u64,
}

/// A noise matrix whose entries are i.i.d. S(α, 0, 1, 0), row `i` from stream `i`.
pub fn sas_noise(params: StableParams, rows: usize, dim: usize, seed: u64) -> Result<NoiseMatrix> {
    let mut data = vec![0.0; rows * dim];
    data.par_chunks_mut(dim.max(1)).enumerate().for_each(|(i, row)| {
        params.fill(&mut rng::stream(seed, i as u64), row);
    });
    NoiseMatrix::new(rows, dim, data, NoiseMeta { iteration: 0, batch_size: 0, seed })
}

/// Runs the battery on i.i.d. SαS noise for each α, in the order given.
///
/// One direction set and one Gaussian baseline serve every α; the noise seed
/// for each α is derived from the sweep seed and the α's position.
pub fn sas_sanity_sweep(cfg: &SweepConfig) -> Result<Vec<(f64, ProjectionReport)>> {
    let params: Vec<StableParams> = cfg.alphas.iter().map(|&a| StableParams::symmetric(a)).collect::<Result<_>>()?;
    if params.is_empty() {
        return Ok(Vec::new());
    }
    let dirs = random_directions(cfg.dim, cfg.directions, derive_seed(cfg.seed, tags::DIRECTIONS))?;
    let baseline = gaussian_baseline(cfg.rows, &dirs, cfg.level, derive_seed(cfg.seed, tags::BASELINE))?;
    let noise_seed = derive_seed(cfg.seed, tags::NOISE);
    params
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let noise = sas_noise(*p, cfg.rows, cfg.dim, derive_seed(noise_seed, i as u64))?;
            Ok((p.alpha(), battery_with_baseline(&noise, &dirs, &baseline)?))
        })
        .collect()
}

pub const NOISE_MAGIC: &[u8; 8] = b"SGNMAT01";

/// Writes the binary noise-matrix format: magic, little-endian `u64` rows and
/// cols, row-major little-endian `f64` data, then a UTF-8 JSON trailer with meta.
pub fn write_noise<W: Write>(noise: &NoiseMatrix, mut w: W) -> Result<()> {
    w.write_all(NOISE_MAGIC)?;
    w.write_all(&(noise.rows as u64).to_le_bytes())?;
    w.write_all(&(noise.cols as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(noise.data.len() * 8);
    for v in &noise.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    serde_json::to_writer(&mut w, &noise.meta)?;
    w.flush()?;
    Ok(())
}

pub fn read_noise<R: Read>(mut r: R) -> Result<NoiseMatrix> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode_noise(&bytes)
}

pub fn decode_noise(bytes: &[u8]) -> Result<NoiseMatrix> {
    if bytes.len() < 24 || &bytes[..8] != NOISE_MAGIC {
        return Err(Error::format("missing SGNMAT01 header"));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let len = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .and_then(|b| usize::try_from(b).ok())
        .ok_or_else(|| Error::format("matrix dimensions overflow"))?;
    let body = bytes.get(24..24 + len).ok_or_else(|| Error::format("truncated noise matrix data"))?;
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let trailer = &bytes[24 + len..];
    let meta = if trailer.is_empty() {
        NoiseMeta::default()
    } else {
        let text = std::str::from_utf8(trailer).map_err(|_| Error::format("trailer is not UTF-8"))?;
        serde_json::from_str(text).map_err(|e| Error::format(format!("bad trailer: {e}")))?
    };
    NoiseMatrix::new(rows as usize, cols as usize, data, meta).map_err(|e| match e {
        Error::Shape(m) | Error::Parameter(m) => Error::Format(m),
        other => other,
    })
}
