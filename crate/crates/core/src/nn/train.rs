//! Minibatch cross-entropy training, deterministic given the seed.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::adam::{adam_step, AdamState};
use crate::nn::grad::{accumulate_ce_grads, NetGrads};
use crate::nn::Network;
use crate::rng::rng_from_seed;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// L2 penalty on weight matrices (biases are not penalized).
    pub l2_penalty: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn adam(learning_rate: f64, epochs: usize, batch_size: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            optimizer: Optimizer::Adam,
            learning_rate,
            epochs,
            batch_size,
            l2_penalty: 0.0,
            seed,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Input("learning rate must be finite and > 0".into()));
        }
        if self.batch_size == 0 || self.batch_size > n {
            return Err(Error::Input(format!(
                "batch size {} must be in 1..={n}",
                self.batch_size
            )));
        }
        if !self.l2_penalty.is_finite() || self.l2_penalty < 0.0 {
            return Err(Error::Input("l2 penalty must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Restrictions applied during training; used to freeze layers (fine-tuning)
/// and to pin pruned weights at zero.
#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Per-layer trainable flags; `None` trains every layer.
    pub trainable_layers: Option<Vec<bool>>,
    /// Per-layer weight masks (`true` = keep at exactly 0.0). Applied after
    /// every optimizer step so pruned coordinates never drift.
    pub zero_masks: Option<Vec<Vec<bool>>>,
}

/// Train a copy of `net` on `data`; `net` itself is untouched.
/// With `epochs == 0` the returned network is bitwise identical to the input.
pub fn train(net: &Network, data: &Dataset, cfg: &TrainConfig) -> Result<Network> {
    train_with_options(net, data, cfg, &TrainOptions::default())
}

pub fn train_with_options(
    net: &Network,
    data: &Dataset,
    cfg: &TrainConfig,
    opts: &TrainOptions,
) -> Result<Network> {
    if data.d != net.input_dim() {
        return Err(Error::Input(format!(
            "dataset dimension {} does not match network input {}",
            data.d,
            net.input_dim()
        )));
    }
    if data.c != net.num_classes() {
        return Err(Error::Input(format!(
            "dataset has {} classes, network outputs {}",
            data.c,
            net.num_classes()
        )));
    }
    cfg.validate(data.len())?;
    let num_layers = net.layers().len();
    if let Some(flags) = &opts.trainable_layers {
        if flags.len() != num_layers {
            return Err(Error::Input("trainable_layers length mismatch".into()));
        }
    }
    if let Some(masks) = &opts.zero_masks {
        if masks.len() != num_layers
            || masks
                .iter()
                .zip(net.layers())
                .any(|(m, l)| m.len() != l.weights.len())
        {
            return Err(Error::Input("zero_masks shape mismatch".into()));
        }
    }

    let mut out = net.clone();
    if cfg.epochs == 0 {
        return Ok(out);
    }

    let trainable = |l: usize| -> bool {
        opts.trainable_layers
            .as_ref()
            .map(|f| f[l])
            .unwrap_or(true)
    };

    let mut adam_w: Vec<AdamState> = out.layers().iter().map(|l| AdamState::new(l.weights.len())).collect();
    let mut adam_b: Vec<AdamState> = out.layers().iter().map(|l| AdamState::new(l.bias.len())).collect();
    let mut grads = NetGrads::zeros(&out);
    let mut rng = rng_from_seed(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();

    for _epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grads.reset();
            for &idx in batch {
                accumulate_ce_grads(&out, &data.points[idx], data.labels[idx], &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            for l in 0..num_layers {
                if !trainable(l) {
                    continue;
                }
                if cfg.l2_penalty > 0.0 {
                    let w = &out.layers()[l].weights;
                    for (g, wv) in grads.weights[l].iter_mut().zip(w.iter()) {
                        *g += cfg.l2_penalty * wv;
                    }
                }
                let layer = &mut out.layers_mut()[l];
                match cfg.optimizer {
                    Optimizer::Adam => {
                        adam_step(&mut layer.weights, &grads.weights[l], &mut adam_w[l], cfg.learning_rate)?;
                        adam_step(&mut layer.bias, &grads.bias[l], &mut adam_b[l], cfg.learning_rate)?;
                    }
                    Optimizer::Sgd => {
                        for (w, g) in layer.weights.iter_mut().zip(grads.weights[l].iter()) {
                            *w -= cfg.learning_rate * g;
                        }
                        for (b, g) in layer.bias.iter_mut().zip(grads.bias[l].iter()) {
                            *b -= cfg.learning_rate * g;
                        }
                    }
                }
                if let Some(masks) = &opts.zero_masks {
                    for (w, &masked) in layer.weights.iter_mut().zip(masks[l].iter()) {
                        if masked {
                            *w = 0.0;
                        }
                    }
                }
            }
        }
    }
    out.append_lineage(&format!("train(seed={},epochs={})", cfg.seed, cfg.epochs));
    Ok(out)
}

/// Fraction of `data` the network labels correctly.
pub fn accuracy(net: &Network, data: &Dataset) -> Result<f64> {
    let mut correct = 0usize;
    for (x, &y) in data.points.iter().zip(data.labels.iter()) {
        if net.predict_label(x)? == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}
