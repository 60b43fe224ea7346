//! Dense feedforward classifiers with f64 parameters.
//!
//! `forward_logits` returns raw logits; softmax is a separate helper so
//! label-only code paths never pay for it. All operations are deterministic
//! given their seeds.

pub mod adam;
mod grad;
pub mod io;
pub mod scalar;
mod train;

pub use adam::{adam_step, AdamState};
pub use grad::input_gradient;
pub use io::{load_model, load_network, save_forest, save_model, save_network, Model};
pub use scalar::LogitFn;
pub use train::{accuracy, train, train_with_options, Optimizer, TrainConfig, TrainOptions};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Per-layer activation. The final layer of a classifier is `Identity` so
/// the network emits raw logits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn tag(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Activation> {
        match tag {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::Format(format!("unknown activation tag '{other}'"))),
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Identity => v,
        }
    }

    /// Derivative at a pre-activation value; the ReLU kink takes subgradient 0.
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// One dense layer; weights are row-major with shape (out_dim, in_dim).
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Layer {
        Layer {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    /// Glorot-uniform weights in ±sqrt(6/(fan_in+fan_out)); zero biases.
    pub fn glorot(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Layer {
        let mut layer = Layer::new(in_dim, out_dim, activation);
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        for w in layer.weights.iter_mut() {
            *w = rng.gen_range(-bound..bound);
        }
        layer
    }

    fn check(&self) -> Result<()> {
        if self.in_dim == 0 || self.out_dim == 0 {
            return Err(Error::Input("layer dimensions must be positive".into()));
        }
        if self.weights.len() != self.in_dim * self.out_dim || self.bias.len() != self.out_dim {
            return Err(Error::Input("layer parameter shapes inconsistent".into()));
        }
        if self.weights.iter().chain(self.bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Input("layer parameters must be finite".into()));
        }
        Ok(())
    }

    /// y = act(W x + b), writing into `out` (len out_dim).
    fn forward_into(&self, x: &[f64], pre: &mut [f64], out: &mut [f64]) {
        for r in 0..self.out_dim {
            let row = &self.weights[r * self.in_dim..(r + 1) * self.in_dim];
            let mut acc = self.bias[r];
            for (w, xi) in row.iter().zip(x.iter()) {
                acc += w * xi;
            }
            pre[r] = acc;
            out[r] = self.activation.apply(acc);
        }
    }
}

/// A feedforward classifier: input dimension d, output dimension c >= 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
    arch_id: String,
    lineage: String,
}

impl Network {
    pub fn from_layers(layers: Vec<Layer>, arch_id: &str, lineage: &str) -> Result<Network> {
        if layers.is_empty() {
            return Err(Error::Input("network needs at least one layer".into()));
        }
        for (idx, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::Input(format!(
                    "layer {idx} output dim {} does not feed layer {} input dim {}",
                    pair[0].out_dim,
                    idx + 1,
                    pair[1].in_dim
                )));
            }
        }
        for layer in &layers {
            layer.check()?;
        }
        if layers.last().unwrap().out_dim < 2 {
            return Err(Error::Input("classifier needs at least 2 classes".into()));
        }
        Ok(Network {
            layers,
            arch_id: arch_id.to_string(),
            lineage: lineage.to_string(),
        })
    }

    /// d -> 32 -> 32 -> c with ReLU hidden layers.
    pub fn small_mlp(d: usize, c: usize, seed: u64) -> Result<Network> {
        let mut rng = rng_from_seed(seed);
        Network::from_layers(
            vec![
                Layer::glorot(d, 32, Activation::Relu, &mut rng),
                Layer::glorot(32, 32, Activation::Relu, &mut rng),
                Layer::glorot(32, c, Activation::Identity, &mut rng),
            ],
            "small-mlp",
            &format!("init(seed={seed})"),
        )
    }

    /// d -> 16 -> c with a ReLU hidden layer.
    pub fn tiny_mlp(d: usize, c: usize, seed: u64) -> Result<Network> {
        let mut rng = rng_from_seed(seed);
        Network::from_layers(
            vec![
                Layer::glorot(d, 16, Activation::Relu, &mut rng),
                Layer::glorot(16, c, Activation::Identity, &mut rng),
            ],
            "tiny-mlp",
            &format!("init(seed={seed})"),
        )
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn arch_id(&self) -> &str {
        &self.arch_id
    }

    pub fn set_arch_id(&mut self, arch_id: &str) {
        self.arch_id = arch_id.to_string();
    }

    pub fn lineage(&self) -> &str {
        &self.lineage
    }

    pub fn append_lineage(&mut self, step: &str) {
        if !self.lineage.is_empty() {
            self.lineage.push(';');
        }
        self.lineage.push_str(step);
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Replace the final layer (dims must still chain).
    pub(crate) fn replace_last_layer(&mut self, layer: Layer) -> Result<()> {
        let last = self.layers.len() - 1;
        if layer.in_dim != self.layers[last].in_dim || layer.out_dim != self.layers[last].out_dim {
            return Err(Error::Input("replacement layer has wrong shape".into()));
        }
        layer.check()?;
        self.layers[last] = layer;
        Ok(())
    }

    pub(crate) fn set_layers(&mut self, layers: Vec<Layer>, arch_id: &str) -> Result<()> {
        let rebuilt = Network::from_layers(layers, arch_id, &self.lineage)?;
        *self = rebuilt;
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Input(format!(
                "input has dimension {}, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("input coordinates must be finite".into()));
        }
        Ok(())
    }

    /// Raw logits Z(x).
    pub fn forward_logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut act = x.to_vec();
        let mut pre = Vec::new();
        for layer in &self.layers {
            pre.resize(layer.out_dim, 0.0);
            let mut out = vec![0.0; layer.out_dim];
            layer.forward_into(&act, &mut pre, &mut out);
            act = out;
        }
        if act.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("forward pass produced non-finite logits".into()));
        }
        Ok(act)
    }

    /// Forward pass keeping every pre-activation and activation, for backprop.
    /// Returned `acts[0]` is the input, `acts[L]` the logits.
    pub(crate) fn forward_trace(&self, x: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        self.check_input(x)?;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        let mut pres: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        acts.push(x.to_vec());
        for layer in &self.layers {
            let mut pre = vec![0.0; layer.out_dim];
            let mut out = vec![0.0; layer.out_dim];
            layer.forward_into(acts.last().unwrap(), &mut pre, &mut out);
            pres.push(pre);
            acts.push(out);
        }
        if acts.last().unwrap().iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("forward pass produced non-finite logits".into()));
        }
        Ok((pres, acts))
    }

    /// argmax over logits; ties resolve to the smallest class index.
    pub fn predict_label(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward_logits(x)?))
    }

    /// Content digest over architecture and parameters (lineage excluded, so
    /// two functionally identical models share a digest).
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"network");
        h.update((self.input_dim() as u64).to_le_bytes());
        h.update((self.num_classes() as u64).to_le_bytes());
        for layer in &self.layers {
            h.update((layer.out_dim as u64).to_le_bytes());
            h.update((layer.in_dim as u64).to_le_bytes());
            h.update(layer.activation.tag().as_bytes());
            for w in &layer.weights {
                h.update(w.to_le_bytes());
            }
            for b in &layer.bias {
                h.update(b.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

/// Index of the largest value; ties resolve to the smallest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax (max subtraction before exponentiation).
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// log(sum(exp(z))) with max subtraction.
pub fn logsumexp(z: &[f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}
