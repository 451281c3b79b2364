use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::param(format!("unknown activation `{other}` (expected relu or tanh)"))),
        }
    }
}

/// Fully connected network. Parameters are stored flat, layer by layer, each
/// layer as its `fan_in × fan_out` row-major weight matrix followed by its bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    sizes: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct LayerSpan {
    fan_in: usize,
    fan_out: usize,
    w: usize,
    b: usize,
}

impl ModelState {
    pub fn from_params(sizes: Vec<usize>, activation: Activation, params: Vec<f64>) -> Result<Self> {
        validate_sizes(&sizes)?;
        let p = param_count(&sizes);
        if params.len() != p {
            return Err(Error::Shape(format!("{} parameters for a network with {p}", params.len())));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("non-finite model parameter"));
        }
        Ok(Self { sizes, activation, params })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Parameter dimension `p`.
    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn classes(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    fn spans(&self) -> Vec<LayerSpan> {
        let mut offset = 0;
        self.sizes
            .windows(2)
            .map(|w| {
                let span = LayerSpan { fan_in: w[0], fan_out: w[1], w: offset, b: offset + w[0] * w[1] };
                offset = span.b + w[1];
                span
            })
            .collect()
    }
}

fn validate_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::param(format!("need ≥ 2 layer sizes, all ≥ 1; got {sizes:?}")));
    }
    Ok(())
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Xavier-uniform weights on ±√(6/(fan_in+fan_out)), zero biases.
pub fn init_model(sizes: &[usize], activation: Activation, seed: u64) -> Result<ModelState> {
    validate_sizes(sizes)?;
    let mut params = vec![0.0; param_count(sizes)];
    let mut model = ModelState { sizes: sizes.to_vec(), activation, params: Vec::new() };
    let mut rng = rng::stream(seed, 0);
    for span in model.spans() {
        let bound = (6.0 / (span.fan_in + span.fan_out) as f64).sqrt();
        for w in &mut params[span.w..span.b] {
            *w = rng.random_range(-bound..=bound);
        }
    }
    model.params = params;
    Ok(model)
}

/// `C = op(A)·op(B)` (+ `C` when `accumulate`), all row-major with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], a_strides: (usize, usize), b: &[f64], b_strides: (usize, usize), c: &mut [f64], accumulate: bool) {
    debug_assert!(c.len() >= m * n);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0 as isize,
            a_strides.1 as isize,
            b.as_ptr(),
            b_strides.0 as isize,
            b_strides.1 as isize,
            if accumulate { 1.0 } else { 0.0 },
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

struct Forward {
    /// Layer inputs: `inputs[0]` is the batch, `inputs[l]` the output of hidden layer `l`.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of hidden layers.
    pre: Vec<Vec<f64>>,
    logits: Vec<f64>,
}

fn forward(model: &ModelState, batch: Vec<f64>, rows: usize) -> Forward {
    let spans = model.spans();
    let mut inputs = vec![batch];
    let mut pre = Vec::with_capacity(spans.len() - 1);
    let mut logits = Vec::new();
    for (l, s) in spans.iter().enumerate() {
        let mut z = vec![0.0; rows * s.fan_out];
        for row in z.chunks_mut(s.fan_out) {
            row.copy_from_slice(&model.params[s.b..s.b + s.fan_out]);
        }
        gemm(rows, s.fan_in, s.fan_out, &inputs[l], (s.fan_in, 1), &model.params[s.w..s.b], (s.fan_out, 1), &mut z, true);
        if l + 1 == spans.len() {
            logits = z;
        } else {
            let a = z.iter().map(|&v| model.activation.apply(v)).collect();
            pre.push(z);
            inputs.push(a);
        }
    }
    Forward { inputs, pre, logits }
}

fn gather(data: &Dataset, indices: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(indices.len() * data.dim());
    for &i in indices {
        out.extend_from_slice(data.input(i));
    }
    out
}

fn check_indices(data: &Dataset, model: &ModelState, indices: &[usize]) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::param("index set must be non-empty"));
    }
    if let Some(&i) = indices.iter().find(|&&i| i >= data.len()) {
        return Err(Error::param(format!("example index {i} out of range for {} examples", data.len())));
    }
    if data.dim() != model.input_dim() || data.classes() > model.classes() {
        return Err(Error::Shape(format!(
            "dataset ({} features, {} classes) does not fit network {:?}",
            data.dim(),
            data.classes(),
            model.sizes
        )));
    }
    Ok(())
}

/// Softmax cross-entropy per row; overwrites `logits` with `softmax − onehot`.
fn softmax_xent(logits: &mut [f64], classes: usize, labels: impl Iterator<Item = usize>) -> f64 {
    let mut total = 0.0;
    for (row, y) in logits.chunks_mut(classes).zip(labels) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let lse = max + sum.ln();
        total += lse - row[y];
        for v in row.iter_mut() {
            *v = (*v - lse).exp();
        }
        row[y] -= 1.0;
    }
    total
}

/// Mean cross-entropy over `indices` and its exact gradient by reverse-mode
/// differentiation through the network.
pub fn loss_and_grad(model: &ModelState, data: &Dataset, indices: &[usize]) -> Result<(f64, Vec<f64>)> {
    check_indices(data, model, indices)?;
    let rows = indices.len();
    let spans = model.spans();
    let classes = model.classes();
    let fwd = forward(model, gather(data, indices), rows);
    let mut delta = fwd.logits;
    let loss = softmax_xent(&mut delta, classes, indices.iter().map(|&i| data.label(i))) / rows as f64;
    let scale = 1.0 / rows as f64;
    delta.iter_mut().for_each(|v| *v *= scale);

    let mut grad = vec![0.0; model.dim()];
    for l in (0..spans.len()).rev() {
        let s = spans[l];
        // dW = inputᵀ · delta
        gemm(s.fan_in, rows, s.fan_out, &fwd.inputs[l], (1, s.fan_in), &delta, (s.fan_out, 1), &mut grad[s.w..s.b], false);
        let db = &mut grad[s.b..s.b + s.fan_out];
        for row in delta.chunks(s.fan_out) {
            for (g, d) in db.iter_mut().zip(row) {
                *g += d;
            }
        }
        if l > 0 {
            // delta_prev = (delta · Wᵀ) ⊙ act'(z)
            let mut back = vec![0.0; rows * s.fan_in];
            gemm(rows, s.fan_out, s.fan_in, &delta, (s.fan_out, 1), &model.params[s.w..s.b], (1, s.fan_out), &mut back, false);
            let z = &fwd.pre[l - 1];
            let a = &fwd.inputs[l];
            for ((b, &zv), &av) in back.iter_mut().zip(z).zip(a) {
                *b *= model.activation.derivative(zv, av);
            }
            delta = back;
        }
    }
    Ok((loss, grad))
}

/// `w ← w − η ∇f(w; B)`.
pub fn sgd_step(model: &ModelState, data: &Dataset, batch: &[usize], learning_rate: f64) -> Result<ModelState> {
    if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
        return Err(Error::param(format!("learning rate must be finite and non-negative, got {learning_rate}")));
    }
    let (_, grad) = loss_and_grad(model, data, batch)?;
    let mut next = model.clone();
    for (w, g) in next.params.iter_mut().zip(&grad) {
        *w -= learning_rate * g;
    }
    Ok(next)
}

/// Full-dataset loss and accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

impl ModelState {
    /// Mean loss and accuracy over `data`, evaluated in fixed chunks.
    pub fn evaluate(&self, data: &Dataset) -> Result<Evaluation> {
        const CHUNK: usize = 1024;
        let all: Vec<usize> = (0..data.len()).collect();
        check_indices(data, self, &all)?;
        let classes = self.classes();
        let (mut loss, mut correct) = (0.0, 0usize);
        for idx in all.chunks(CHUNK) {
            let mut logits = forward(self, gather(data, idx), idx.len()).logits;
            for (row, &i) in logits.chunks(classes).zip(idx) {
                let best = row
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (c, &v)| if v > acc.1 { (c, v) } else { acc })
                    .0;
                correct += usize::from(best == data.label(i));
            }
            loss += softmax_xent(&mut logits, classes, idx.iter().map(|&i| data.label(i)));
        }
        Ok(Evaluation { loss: loss / data.len() as f64, accuracy: correct as f64 / data.len() as f64 })
    }
}
