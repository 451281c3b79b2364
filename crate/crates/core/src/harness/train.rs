use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::model::{init_model, loss_and_grad, sgd_step, Activation, Evaluation, ModelState};
use crate::error::{Error, Result};
use crate::projection::{
    battery_with_baseline, gaussian_baseline, random_directions, NoiseMatrix, NoiseMeta, ProjectionReport,
};
use crate::rng::{self, derive_seed, tags};
use crate::univariate::Level;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub iterations: u64,
    pub checkpoint_every: u64,
    /// Probe minibatches per checkpoint (`M`).
    pub sgn_minibatches: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128],
            activation: Activation::Relu,
            batch_size: 256,
            learning_rate: 0.01,
            iterations: 500,
            checkpoint_every: 100,
            sgn_minibatches: 1000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self, data: &Dataset) -> Result<()> {
        if self.batch_size == 0 || self.batch_size > data.len() {
            return Err(Error::param(format!("batch size {} outside [1, {}]", self.batch_size, data.len())));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::param("checkpoint_every must be at least 1"));
        }
        Ok(())
    }

    pub fn layer_sizes(&self, data: &Dataset) -> Vec<usize> {
        let mut sizes = vec![data.dim()];
        sizes.extend(&self.hidden);
        sizes.push(data.classes());
        sizes
    }
}

/// How probe minibatches are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeSampling {
    /// `b` indices drawn uniformly with replacement, independently per probe.
    #[default]
    WithReplacement,
    /// Every probe is the full index set; the noise is identically zero.
    FullBatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub directions: usize,
    pub level: Level,
    pub sampling: ProbeSampling,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { directions: 1000, level: Level::P05, sampling: ProbeSampling::WithReplacement }
    }
}

fn draw_batch<R: Rng>(rng: &mut R, n: usize, b: usize) -> Vec<usize> {
    (0..b).map(|_| rng.random_range(0..n)).collect()
}

/// SGN matrix: row `j` is `∇f(w; B_j) − ∇f(w; [n])` with `B_j` drawn from probe
/// stream `j` of `seed`.
pub fn extract_sgn(model: &ModelState, data: &Dataset, batch_size: usize, m: usize, seed: u64) -> Result<NoiseMatrix> {
    extract_sgn_with(model, data, batch_size, m, seed, ProbeSampling::WithReplacement)
}

pub fn extract_sgn_with(
    model: &ModelState,
    data: &Dataset,
    batch_size: usize,
    m: usize,
    seed: u64,
    sampling: ProbeSampling,
) -> Result<NoiseMatrix> {
    let all: Vec<usize> = (0..data.len()).collect();
    let (_, full) = loss_and_grad(model, data, &all)?;
    sgn_rows(model, data, &full, batch_size, m, seed, sampling)
}

fn sgn_rows(
    model: &ModelState,
    data: &Dataset,
    full: &[f64],
    batch_size: usize,
    m: usize,
    seed: u64,
    sampling: ProbeSampling,
) -> Result<NoiseMatrix> {
    if batch_size == 0 || batch_size > data.len() {
        return Err(Error::param(format!("batch size {batch_size} outside [1, {}]", data.len())));
    }
    let p = model.dim();
    let mut out = vec![0.0; m * p];
    out.par_chunks_mut(p)
        .enumerate()
        .map(|(j, row)| -> Result<()> {
            let batch = match sampling {
                ProbeSampling::WithReplacement => draw_batch(&mut rng::stream(seed, j as u64), data.len(), batch_size),
                ProbeSampling::FullBatch => (0..data.len()).collect(),
            };
            let (_, g) = loss_and_grad(model, data, &batch)?;
            for ((r, gi), fi) in row.iter_mut().zip(&g).zip(full) {
                *r = gi - fi;
            }
            Ok(())
        })
        .collect::<Result<()>>()?;
    NoiseMatrix::new(m, p, out, NoiseMeta { iteration: 0, batch_size: batch_size as u64, seed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iteration: u64,
    pub model: ModelState,
    /// Full-batch training loss and accuracy.
    pub train: Evaluation,
    pub test: Option<Evaluation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub config: TrainConfig,
    pub probe: ProbeConfig,
    pub direction_seed: u64,
    pub baseline_seed: u64,
    pub checkpoints: Vec<(Checkpoint, ProjectionReport)>,
}

/// Trains with constant-learning-rate SGD and probes the gradient noise at
/// every multiple of `checkpoint_every` up to and including `iterations`.
///
/// One direction set and one Gaussian baseline are shared by all checkpoints.
/// `on_noise` sees each checkpoint's noise matrix before the battery runs on it.
pub fn train_and_probe<F>(
    config: &TrainConfig,
    probe: &ProbeConfig,
    data: &Dataset,
    test_data: Option<&Dataset>,
    mut on_noise: F,
) -> Result<TrainRun>
where
    F: FnMut(&Checkpoint, &NoiseMatrix) -> Result<()>,
{
    config.validate(data)?;
    let sizes = config.layer_sizes(data);
    let mut model = init_model(&sizes, config.activation, derive_seed(config.seed, tags::INIT))?;
    let direction_seed = derive_seed(config.seed, tags::DIRECTIONS);
    let baseline_seed = derive_seed(config.seed, tags::BASELINE);
    let probe_seed = derive_seed(config.seed, tags::PROBES);
    let dirs = random_directions(model.dim(), probe.directions, direction_seed)?;
    let baseline = gaussian_baseline(config.sgn_minibatches, &dirs, probe.level, baseline_seed)?;
    let mut batches = rng::stream(derive_seed(config.seed, tags::TRAIN_BATCHES), 0);
    let all: Vec<usize> = (0..data.len()).collect();

    let mut checkpoints = Vec::new();
    for t in 0..=config.iterations {
        if t % config.checkpoint_every == 0 {
            let (loss, full) = loss_and_grad(&model, data, &all)?;
            let train = Evaluation { loss, accuracy: model.evaluate(data)?.accuracy };
            let test = test_data.map(|d| model.evaluate(d)).transpose()?;
            let checkpoint = Checkpoint { iteration: t, model: model.clone(), train, test };
            let mut noise = sgn_rows(
                &model,
                data,
                &full,
                config.batch_size,
                config.sgn_minibatches,
                derive_seed(probe_seed, t),
                probe.sampling,
            )?;
            noise.meta.iteration = t;
            on_noise(&checkpoint, &noise)?;
            let report = battery_with_baseline(&noise, &dirs, &baseline)?;
            checkpoints.push((checkpoint, report));
        }
        if t < config.iterations {
            let batch = draw_batch(&mut batches, data.len(), config.batch_size);
            model = sgd_step(&model, data, &batch, config.learning_rate)?;
        }
    }
    Ok(TrainRun { config: config.clone(), probe: *probe, direction_seed, baseline_seed, checkpoints })
}
