//! Fine-tuning derived suspects. All four keep (or recover) the task while
//! perturbing parameters, which is what makes them useful positives.

use crate::data::Dataset;
use crate::error::Result;
use crate::nn::{train_with_options, Layer, Network, TrainConfig, TrainOptions};
use crate::rng::stream;

fn last_only(net: &Network) -> TrainOptions {
    let mut flags = vec![false; net.layers().len()];
    *flags.last_mut().unwrap() = true;
    TrainOptions { trainable_layers: Some(flags), ..TrainOptions::default() }
}

fn reinit_last(net: &Network, seed: u64) -> Result<Network> {
    let mut out = net.clone();
    let last = net.layers().last().unwrap();
    let mut rng = stream(seed, "reinit", 0);
    let fresh = Layer::glorot(last.in_dim, last.out_dim, last.activation, &mut rng);
    out.replace_last_layer(fresh)?;
    Ok(out)
}

/// FTLL: fine-tune the last layer, everything below stays bitwise intact.
pub fn fine_tune_last_layer(net: &Network, data: &Dataset, cfg: &TrainConfig) -> Result<Network> {
    let mut out = train_with_options(net, data, cfg, &last_only(net))?;
    out.append_lineage("ftll");
    Ok(out)
}

/// FTAL: fine-tune all layers.
pub fn fine_tune_all_layers(net: &Network, data: &Dataset, cfg: &TrainConfig) -> Result<Network> {
    let mut out = train_with_options(net, data, cfg, &TrainOptions::default())?;
    out.append_lineage("ftal");
    Ok(out)
}

/// RTLL: re-initialize the last layer (Glorot weights, zero biases), then
/// train only it; the representation underneath stays bitwise intact.
pub fn retrain_last_layer(net: &Network, data: &Dataset, cfg: &TrainConfig) -> Result<Network> {
    let reset = reinit_last(net, cfg.seed)?;
    let mut out = train_with_options(&reset, data, cfg, &last_only(net))?;
    out.append_lineage("rtll");
    Ok(out)
}

/// RTAL: re-initialize the last layer, then train the whole network.
pub fn retrain_all_layers(net: &Network, data: &Dataset, cfg: &TrainConfig) -> Result<Network> {
    let reset = reinit_last(net, cfg.seed)?;
    let mut out = train_with_options(&reset, data, cfg, &TrainOptions::default())?;
    out.append_lineage("rtal");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, Kind, SyntheticSpec};
    use crate::nn::{accuracy, train};

    fn fixture() -> (Network, Dataset) {
        let data = generate(&SyntheticSpec {
            kind: Kind::Blobs,
            n_per_class: 50,
            classes: 3,
            dim: 4,
            noise_sigma: 0.04,
            seed: 41,
        })
        .unwrap();
        let net = Network::small_mlp(4, 3, 7).unwrap();
        let trained = train(&net, &data, &TrainConfig::adam(0.01, 25, 16, 3)).unwrap();
        assert!(accuracy(&trained, &data).unwrap() >= 0.98);
        (trained, data)
    }

    #[test]
    fn ftll_touches_only_the_last_layer() {
        let (net, data) = fixture();
        let tuned = fine_tune_last_layer(&net, &data, &TrainConfig::adam(0.01, 3, 16, 99)).unwrap();
        let n = net.layers().len();
        for l in 0..n - 1 {
            assert_eq!(net.layers()[l], tuned.layers()[l], "layer {l} moved");
        }
        assert_ne!(net.layers()[n - 1], tuned.layers()[n - 1]);
    }

    #[test]
    fn ftal_moves_every_layer() {
        let (net, data) = fixture();
        let tuned = fine_tune_all_layers(&net, &data, &TrainConfig::adam(0.01, 3, 16, 99)).unwrap();
        for l in 0..net.layers().len() {
            assert_ne!(net.layers()[l], tuned.layers()[l], "layer {l} did not move");
        }
    }

    #[test]
    fn rtll_resets_the_head_but_keeps_the_representation() {
        let (net, data) = fixture();
        let cfg = TrainConfig::adam(0.01, 15, 16, 123);
        let out = retrain_last_layer(&net, &data, &cfg).unwrap();
        let n = net.layers().len();
        for l in 0..n - 1 {
            assert_eq!(net.layers()[l], out.layers()[l]);
        }
        assert_ne!(net.layers()[n - 1], out.layers()[n - 1]);
        // A fresh head over a good representation relearns the task.
        assert!(accuracy(&out, &data).unwrap() >= 0.95);
    }

    #[test]
    fn rtal_recovers_accuracy_after_the_reset() {
        let (net, data) = fixture();
        let cfg = TrainConfig::adam(0.01, 15, 16, 123);
        let out = retrain_all_layers(&net, &data, &cfg).unwrap();
        assert!(accuracy(&out, &data).unwrap() >= 0.95);
        assert_ne!(net.layers()[0], out.layers()[0]);
    }

    #[test]
    fn fine_tuning_is_deterministic() {
        let (net, data) = fixture();
        let cfg = TrainConfig::adam(0.01, 4, 16, 5);
        assert_eq!(
            retrain_all_layers(&net, &data, &cfg).unwrap(),
            retrain_all_layers(&net, &data, &cfg).unwrap()
        );
    }
}
