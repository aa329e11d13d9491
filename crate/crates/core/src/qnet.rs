//! Fully connected Q-network with a target copy, Adam optimizer and a uniform
//! experience-replay ring buffer.
//!
//! Layout is `input -> 128 -> 64 -> 32 -> 3` with ReLU on the hidden layers and
//! a linear output head, one Q-value per environment action.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensor_env::{Action, HusimiFeatures};

pub const HIDDEN_LAYERS: [usize; 3] = [128, 64, 32];
pub const N_ACTIONS: usize = Action::COUNT;

pub type QValues = [f64; N_ACTIONS];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_anneal_episodes: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub update_every_steps: usize,
    pub target_sync_every_steps: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.01,
            epsilon_anneal_episodes: 2000,
            batch_size: 64,
            buffer_capacity: 10_000,
            update_every_steps: 10,
            target_sync_every_steps: 100,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must be in [0, 1], got {}", self.gamma)));
        }
        let eps_range = 0.0..=1.0;
        if !eps_range.contains(&self.epsilon_start)
            || !eps_range.contains(&self.epsilon_end)
            || self.epsilon_end > self.epsilon_start
        {
            return Err(Error::Config(format!(
                "need 0 <= epsilon_end <= epsilon_start <= 1, got {} and {}",
                self.epsilon_end, self.epsilon_start
            )));
        }
        for (name, value) in [
            ("epsilon_anneal_episodes", self.epsilon_anneal_episodes),
            ("batch_size", self.batch_size),
            ("buffer_capacity", self.buffer_capacity),
            ("update_every_steps", self.update_every_steps),
            ("target_sync_every_steps", self.target_sync_every_steps),
        ] {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

/// Linear annealing from `epsilon_start` to `epsilon_end` over
/// `epsilon_anneal_episodes` episodes, flat afterwards.
pub fn epsilon_at(episode: usize, hp: &Hyperparams) -> f64 {
    if episode >= hp.epsilon_anneal_episodes {
        return hp.epsilon_end;
    }
    let slope = (hp.epsilon_start - hp.epsilon_end) / hp.epsilon_anneal_episodes as f64;
    (hp.epsilon_start - episode as f64 * slope).max(hp.epsilon_end)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_out x n_in`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            biases: vec![0.0; n_out],
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.n_in).zip(&self.biases).map(
            |(row, b)| b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>(),
        ));
    }
}

/// Weights and biases of the whole network. Also used as the container for
/// gradients and optimizer moments, which share its shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub layers: Vec<Layer>,
}

fn layer_dims(input_dim: usize) -> Vec<(usize, usize)> {
    let mut dims = Vec::with_capacity(HIDDEN_LAYERS.len() + 1);
    let mut prev = input_dim;
    for &h in HIDDEN_LAYERS.iter().chain(std::iter::once(&N_ACTIONS)) {
        dims.push((prev, h));
        prev = h;
    }
    dims
}

/// He-uniform weights (`U(-sqrt(6/fan_in), sqrt(6/fan_in))`) and zero biases,
/// drawn from a ChaCha stream keyed by `seed`.
pub fn init_params(seed: u64, input_dim: usize) -> Result<NetworkParams> {
    if input_dim == 0 {
        return Err(Error::Config("input_dim must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = layer_dims(input_dim)
        .into_iter()
        .map(|(n_in, n_out)| {
            let bound = (6.0 / n_in as f64).sqrt();
            let mut layer = Layer::zeros(n_in, n_out);
            for w in &mut layer.weights {
                *w = rng.gen_range(-bound..bound);
            }
            layer
        })
        .collect();
    Ok(NetworkParams { layers })
}

/// Per-layer activations of one forward pass, kept for backpropagation.
struct ForwardTrace {
    /// `activations[0]` is the input; `activations[l + 1]` the output of layer `l`.
    activations: Vec<Vec<f64>>,
}

impl NetworkParams {
    pub fn zeros(input_dim: usize) -> Self {
        let layers = layer_dims(input_dim)
            .into_iter()
            .map(|(i, o)| Layer::zeros(i, o))
            .collect();
        Self { layers }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(|l| Layer::zeros(l.n_in, l.n_out)).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Mutable access to the `index`-th scalar in (layer, weights, biases) order.
    pub fn param_mut(&mut self, mut index: usize) -> &mut f64 {
        for layer in &mut self.layers {
            if index < layer.weights.len() {
                return &mut layer.weights[index];
            }
            index -= layer.weights.len();
            if index < layer.biases.len() {
                return &mut layer.biases[index];
            }
            index -= layer.biases.len();
        }
        panic!("parameter index out of range");
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()))
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    pub fn all_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: len,
            });
        }
        Ok(())
    }

    fn trace(&self, x: &[f64]) -> ForwardTrace {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.n_out);
            layer.affine(&activations[l], &mut out);
            if l != last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            activations.push(out);
        }
        ForwardTrace { activations }
    }

    pub fn forward(&self, x: &[f64]) -> Result<QValues> {
        self.check_input(x.len())?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.affine(&cur, &mut next);
            if l != last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        let q: QValues = [cur[0], cur[1], cur[2]];
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite Q-values {q:?}")));
        }
        Ok(q)
    }

    pub fn forward_features(&self, features: &HusimiFeatures) -> Result<QValues> {
        self.forward(features.as_slice())
    }

    /// Accumulates into `grads` the gradient of a scalar loss whose derivative
    /// with respect to the network output is `d_out`.
    fn backprop(&self, trace: &ForwardTrace, d_out: &QValues, grads: &mut NetworkParams) {
        let mut delta: Vec<f64> = d_out.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &trace.activations[l];
            let g = &mut grads.layers[l];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.biases[o] += d;
                let row = &mut g.weights[o * layer.n_in..(o + 1) * layer.n_in];
                row.iter_mut().zip(input).for_each(|(gw, x)| *gw += d * x);
            }
            if l == 0 {
                break;
            }
            let mut prev = vec![0.0; layer.n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
                prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
            }
            // ReLU derivative: hidden activation is zero exactly where the unit is off.
            prev.iter_mut()
                .zip(input)
                .for_each(|(p, &a)| if a <= 0.0 { *p = 0.0 });
            delta = prev;
        }
    }
}

/// Loss `1/2 ||q(x) - target||^2` and its gradient for one input.
pub fn regression_loss_and_grad(
    params: &NetworkParams,
    x: &[f64],
    target: &QValues,
) -> Result<(f64, NetworkParams)> {
    params.check_input(x.len())?;
    let trace = params.trace(x);
    let q = trace.activations.last().expect("network has layers");
    let mut d_out = [0.0; N_ACTIONS];
    let mut loss = 0.0;
    for a in 0..N_ACTIONS {
        d_out[a] = q[a] - target[a];
        loss += 0.5 * d_out[a] * d_out[a];
    }
    let mut grads = params.zeros_like();
    params.backprop(&trace, &d_out, &mut grads);
    Ok((loss, grads))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: HusimiFeatures,
    pub action: Action,
    pub reward: f64,
    pub next_state: HusimiFeatures,
    pub done: bool,
}

/// `r + gamma * max_a' Q_target(s', a')`, or just `r` on terminal transitions.
pub fn td_targets(batch: &[&Transition], target: &NetworkParams, gamma: f64) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|t| {
            if t.done {
                return Ok(t.reward);
            }
            let q_next = target.forward_features(&t.next_state)?;
            let best = q_next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(t.reward + gamma * best)
        })
        .collect()
}

/// Mean squared TD error over the batch, with gradient flowing only through
/// the Q-value of the action actually taken.
pub fn td_loss_and_grad(
    params: &NetworkParams,
    batch: &[&Transition],
    targets: &[f64],
) -> Result<(f64, NetworkParams)> {
    if batch.is_empty() {
        return Err(Error::Usage("empty training batch".into()));
    }
    if batch.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: batch.len(),
            actual: targets.len(),
        });
    }
    let scale = 1.0 / batch.len() as f64;
    let mut grads = params.zeros_like();
    let mut loss = 0.0;
    for (t, &y) in batch.iter().zip(targets) {
        params.check_input(t.state.len())?;
        let trace = params.trace(t.state.as_slice());
        let q = trace.activations.last().expect("network has layers");
        let a = t.action.index();
        let err = q[a] - y;
        loss += err * err * scale;
        let mut d_out = [0.0; N_ACTIONS];
        d_out[a] = 2.0 * err * scale;
        params.backprop(&trace, &d_out, &mut grads);
    }
    Ok((loss, grads))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: NetworkParams,
    v: NetworkParams,
}

impl Adam {
    pub fn new(shape: &NetworkParams) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: shape.zeros_like(),
            v: shape.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut NetworkParams, grads: &NetworkParams, lr: f64) {
        self.t += 1;
        let t = self.t as i32;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for (((p, g), m), v) in params
            .values_mut()
            .zip(grads.values())
            .zip(self.m.values_mut())
            .zip(self.v.values_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}

/// One optimizer step on the TD loss. Returns the pre-update loss.
pub fn train_step(
    params: &mut NetworkParams,
    target: &NetworkParams,
    optimizer: &mut Adam,
    batch: &[&Transition],
    gamma: f64,
    learning_rate: f64,
) -> Result<f64> {
    let targets = td_targets(batch, target, gamma)?;
    let (loss, grads) = td_loss_and_grad(params, batch, &targets)?;
    if !loss.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite TD loss {loss} at optimizer step {}",
            optimizer.t + 1
        )));
    }
    optimizer.step(params, &grads, learning_rate);
    if !params.all_finite() {
        return Err(Error::Numerical(format!(
            "non-finite parameters after optimizer step {}",
            optimizer.t
        )));
    }
    Ok(loss)
}

/// Hard copy of the online parameters into the target network.
pub fn sync_target(online: &NetworkParams, target: &mut NetworkParams) {
    target.clone_from(online);
}

/// Fixed-capacity ring buffer; once full, each push overwrites the oldest entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayBuffer {
    capacity: usize,
    cursor: usize,
    items: Vec<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be at least 1".into()));
        }
        Ok(Self {
            capacity,
            cursor: 0,
            items: Vec::with_capacity(capacity.min(1 << 16)),
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, transition: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(transition);
        } else {
            self.items[self.cursor] = transition;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Storage slot indices of a uniform draw with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.items.len() < batch_size || batch_size == 0 {
            return Err(Error::NotReady {
                available: self.items.len(),
                required: batch_size.max(1),
            });
        }
        Ok((0..batch_size).map(|_| rng.gen_range(0..self.items.len())).collect())
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        Ok(self
            .sample_indices(batch_size, rng)?
            .into_iter()
            .map(|i| &self.items[i])
            .collect())
    }
}

pub const CHECKPOINT_FORMAT: &str = "qsc-qnet-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to resume learning: both networks, optimizer moments,
/// hyperparameters and the agent's random stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub hyperparams: Hyperparams,
    pub online: NetworkParams,
    pub target: NetworkParams,
    pub optimizer: Adam,
    pub rng: ChaCha8Rng,
}

impl Checkpoint {
    pub fn new(
        hyperparams: Hyperparams,
        online: NetworkParams,
        target: NetworkParams,
        optimizer: Adam,
        rng: ChaCha8Rng,
    ) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            hyperparams,
            online,
            target,
            optimizer,
            rng,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                ckpt.format, ckpt.version
            )));
        }
        if ckpt.online.zeros_like() != ckpt.target.zeros_like() {
            return Err(Error::Checkpoint("online and target shapes differ".into()));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
