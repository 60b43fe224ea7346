//! Pruning-derived suspects: unstructured magnitude pruning (WP) and
//! structured filter pruning (FP), plus the accuracy-bounded ladders that
//! sweep the pruning fraction.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{accuracy, train, train_with_options, Layer, Network, TrainConfig, TrainOptions};
use crate::rng::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PruneMode {
    Weight,
    Filter,
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(fraction.is_finite() && (0.0..1.0).contains(&fraction)) {
        return Err(Error::Input(format!(
            "pruning fraction must lie in [0, 1), got {fraction}"
        )));
    }
    Ok(())
}

/// Zero the globally smallest-magnitude `floor(fraction * W)` weights
/// (W counts weight-matrix entries across all layers; biases are spared),
/// then retrain with those coordinates pinned at zero.
pub fn weight_prune(
    net: &Network,
    fraction: f64,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<Network> {
    check_fraction(fraction)?;
    let total: usize = net.layers().iter().map(|l| l.weights.len()).sum();
    let count = (fraction * total as f64).floor() as usize;

    let mut ranked: Vec<(f64, usize, usize)> = Vec::with_capacity(total);
    for (l, layer) in net.layers().iter().enumerate() {
        for (idx, w) in layer.weights.iter().enumerate() {
            ranked.push((w.abs(), l, idx));
        }
    }
    // Total order: magnitude, then layer, then flat index; ties cannot make
    // the selection depend on sort stability.
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut masks: Vec<Vec<bool>> = net.layers().iter().map(|l| vec![false; l.weights.len()]).collect();
    let mut pruned = net.clone();
    for &(_, l, idx) in ranked.iter().take(count) {
        masks[l][idx] = true;
        pruned.layers_mut()[l].weights[idx] = 0.0;
    }

    let opts = TrainOptions { zero_masks: Some(masks), ..TrainOptions::default() };
    let mut out = train_with_options(&pruned, data, cfg, &opts)?;
    out.append_lineage(&format!("wp({fraction})"));
    Ok(out)
}

/// Remove the `floor(fraction * units)` hidden units with the smallest
/// incoming-weight L1 norm from every hidden layer (ranked on the original
/// weights), shrinking the adjacent matrices, then retrain. The output layer
/// is never pruned.
pub fn filter_prune(
    net: &Network,
    fraction: f64,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<Network> {
    check_fraction(fraction)?;
    let n_layers = net.layers().len();
    if n_layers < 2 {
        return Err(Error::Input("filter pruning needs at least one hidden layer".into()));
    }

    // keep[l] = surviving unit indices of hidden layer l, ascending.
    let mut keep: Vec<Vec<usize>> = Vec::with_capacity(n_layers - 1);
    for layer in &net.layers()[..n_layers - 1] {
        let drop = (fraction * layer.out_dim as f64).floor() as usize;
        let mut order: Vec<usize> = (0..layer.out_dim).collect();
        let l1 = |r: usize| -> f64 {
            layer.weights[r * layer.in_dim..(r + 1) * layer.in_dim]
                .iter()
                .map(|w| w.abs())
                .sum()
        };
        order.sort_by(|&a, &b| l1(a).partial_cmp(&l1(b)).unwrap().then(a.cmp(&b)));
        let mut survivors: Vec<usize> = order[drop..].to_vec();
        survivors.sort_unstable();
        keep.push(survivors);
    }

    let mut new_layers: Vec<Layer> = Vec::with_capacity(n_layers);
    for (l, layer) in net.layers().iter().enumerate() {
        let cols: Option<&[usize]> = if l == 0 { None } else { Some(&keep[l - 1]) };
        let rows: Option<&[usize]> = if l < n_layers - 1 { Some(&keep[l]) } else { None };
        let in_dim = cols.map_or(layer.in_dim, |c| c.len());
        let out_dim = rows.map_or(layer.out_dim, |r| r.len());
        let mut weights = Vec::with_capacity(in_dim * out_dim);
        let mut bias = Vec::with_capacity(out_dim);
        let row_indices: Vec<usize> = match rows {
            Some(r) => r.to_vec(),
            None => (0..layer.out_dim).collect(),
        };
        for &r in &row_indices {
            let full = &layer.weights[r * layer.in_dim..(r + 1) * layer.in_dim];
            match cols {
                Some(cs) => weights.extend(cs.iter().map(|&c| full[c])),
                None => weights.extend_from_slice(full),
            }
            bias.push(layer.bias[r]);
        }
        new_layers.push(Layer { in_dim, out_dim, weights, bias, activation: layer.activation });
    }

    let arch_id = format!("{}-fp", net.arch_id());
    let mut shrunk = net.clone();
    shrunk.set_layers(new_layers, &arch_id)?;
    let mut out = train(&shrunk, data, cfg)?;
    out.append_lineage(&format!("fp({fraction})"));
    Ok(out)
}

/// Ladder step size for filter pruning: 1/16 when every hidden width is a
/// multiple of 16, otherwise one unit of the narrowest hidden layer.
pub fn default_filter_step(net: &Network) -> f64 {
    let hidden: Vec<usize> = net.layers()[..net.layers().len() - 1]
        .iter()
        .map(|l| l.out_dim)
        .collect();
    if !hidden.is_empty() && hidden.iter().all(|w| w % 16 == 0) {
        1.0 / 16.0
    } else {
        1.0 / hidden.iter().copied().min().unwrap_or(1).max(1) as f64
    }
}

#[derive(Debug, Clone)]
pub struct LadderRung {
    pub fraction: f64,
    pub model: Network,
    pub test_accuracy: f64,
}

/// Prune at fraction step, 2*step, ... and keep the maximal prefix whose
/// test accuracy stays within `max_acc_loss` of the unpruned baseline. The
/// ladder stops at the first violation; later rungs are not considered.
/// Each rung retrains with a seed derived from (cfg.seed, mode, rung index).
pub fn pruning_ladder(
    net: &Network,
    mode: PruneMode,
    step: f64,
    max_acc_loss: f64,
    train_data: &Dataset,
    test_data: &Dataset,
    cfg: &TrainConfig,
) -> Result<Vec<LadderRung>> {
    if !(step.is_finite() && step > 0.0 && step < 1.0) {
        return Err(Error::Input(format!("ladder step must lie in (0, 1), got {step}")));
    }
    let baseline = accuracy(net, test_data)?;
    let fractions = ladder_fractions(step);
    let tag = match mode {
        PruneMode::Weight => "wp-ladder",
        PruneMode::Filter => "fp-ladder",
    };
    let candidates: Vec<LadderRung> = fractions
        .par_iter()
        .enumerate()
        .map(|(i, &fraction)| {
            let mut rung_cfg = *cfg;
            rung_cfg.seed = derive_seed(cfg.seed, tag, i as u64);
            let model = match mode {
                PruneMode::Weight => weight_prune(net, fraction, train_data, &rung_cfg)?,
                PruneMode::Filter => filter_prune(net, fraction, train_data, &rung_cfg)?,
            };
            let test_accuracy = accuracy(&model, test_data)?;
            Ok(LadderRung { fraction, model, test_accuracy })
        })
        .collect::<Result<_>>()?;
    let kept = candidates
        .into_iter()
        .take_while(|rung| baseline - rung.test_accuracy <= max_acc_loss)
        .collect();
    Ok(kept)
}

/// step, 2*step, ... below 1. When 1/step is (nearly) integral the fractions
/// are computed as i/round(1/step) so standard steps print as clean decimals.
fn ladder_fractions(step: f64) -> Vec<f64> {
    let inv = (1.0 / step).round();
    let exact = (inv * step - 1.0).abs() < 1e-9;
    let mut out = Vec::new();
    for i in 1..10_000u32 {
        let f = if exact { f64::from(i) / inv } else { f64::from(i) * step };
        if f >= 1.0 - 1e-12 {
            break;
        }
        out.push(f);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, split, Kind, SyntheticSpec};

    fn fixture() -> (Network, Dataset, Dataset) {
        let data = generate(&SyntheticSpec {
            kind: Kind::Blobs,
            n_per_class: 60,
            classes: 3,
            dim: 4,
            noise_sigma: 0.04,
            seed: 17,
        })
        .unwrap();
        let (train_data, test_data) = split(&data, 0.75, 99).unwrap();
        let net = Network::small_mlp(4, 3, 7).unwrap();
        let trained = train(&net, &train_data, &TrainConfig::adam(0.01, 25, 16, 3)).unwrap();
        (trained, train_data, test_data)
    }

    #[test]
    fn weight_pruning_hits_the_exact_sparsity() {
        let (net, train_data, _) = fixture();
        let total: usize = net.layers().iter().map(|l| l.weights.len()).sum();
        assert_eq!(total, 4 * 32 + 32 * 32 + 32 * 3);
        let before = net
            .layers()
            .iter()
            .flat_map(|l| l.weights.iter())
            .filter(|w| **w == 0.0)
            .count();
        assert_eq!(before, 0, "fixture already has zero weights");
        let cfg = TrainConfig::adam(0.01, 3, 16, 55);
        let pruned = weight_prune(&net, 0.3, &train_data, &cfg).unwrap();
        let zeros = pruned
            .layers()
            .iter()
            .flat_map(|l| l.weights.iter())
            .filter(|w| **w == 0.0)
            .count();
        assert_eq!(zeros, (0.3 * total as f64).floor() as usize);
    }

    #[test]
    fn pruned_positions_survive_retraining() {
        let (net, train_data, _) = fixture();
        let cfg = TrainConfig::adam(0.01, 6, 16, 56);
        let pruned = weight_prune(&net, 0.5, &train_data, &cfg).unwrap();
        // The zeroed coordinates are exactly the smallest-magnitude half of
        // the original weights; recompute the selection and check each.
        let total: usize = net.layers().iter().map(|l| l.weights.len()).sum();
        let mut ranked: Vec<(f64, usize, usize)> = Vec::new();
        for (l, layer) in net.layers().iter().enumerate() {
            for (idx, w) in layer.weights.iter().enumerate() {
                ranked.push((w.abs(), l, idx));
            }
        }
        ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        for &(_, l, idx) in ranked.iter().take((0.5 * total as f64).floor() as usize) {
            assert_eq!(pruned.layers()[l].weights[idx], 0.0, "layer {l} weight {idx} drifted");
        }
    }

    #[test]
    fn zero_fraction_prunes_nothing() {
        let (net, train_data, _) = fixture();
        let cfg = TrainConfig::adam(0.01, 0, 16, 1);
        let out = weight_prune(&net, 0.0, &train_data, &cfg).unwrap();
        assert_eq!(net.layers(), out.layers());
    }

    #[test]
    fn fraction_one_is_rejected() {
        let (net, train_data, _) = fixture();
        let cfg = TrainConfig::adam(0.01, 1, 16, 1);
        assert!(weight_prune(&net, 1.0, &train_data, &cfg).is_err());
        assert!(filter_prune(&net, -0.1, &train_data, &cfg).is_err());
    }

    #[test]
    fn filter_pruning_shrinks_the_hidden_dims() {
        let (net, train_data, _) = fixture();
        let cfg = TrainConfig::adam(0.01, 0, 16, 1);
        let out = filter_prune(&net, 1.0 / 16.0, &train_data, &cfg).unwrap();
        let dims: Vec<(usize, usize)> = out.layers().iter().map(|l| (l.in_dim, l.out_dim)).collect();
        assert_eq!(dims, vec![(4, 30), (30, 30), (30, 3)]);
        assert_eq!(out.arch_id(), "small-mlp-fp");
    }

    #[test]
    fn shrinking_matches_masking_exactly() {
        // Zeroing a unit's incoming row and bias silences it; removing it
        // must compute the same function. Compare forward passes.
        let (net, train_data, _) = fixture();
        let cfg = TrainConfig::adam(0.01, 0, 16, 1); // no retraining
        let shrunk = filter_prune(&net, 0.25, &train_data, &cfg).unwrap();

        let mut masked = net.clone();
        let n_layers = net.layers().len();
        for l in 0..n_layers - 1 {
            let layer = &net.layers()[l];
            let drop = (0.25 * layer.out_dim as f64).floor() as usize;
            let mut order: Vec<usize> = (0..layer.out_dim).collect();
            let l1 = |r: usize| -> f64 {
                layer.weights[r * layer.in_dim..(r + 1) * layer.in_dim]
                    .iter()
                    .map(|w| w.abs())
                    .sum()
            };
            order.sort_by(|&a, &b| l1(a).partial_cmp(&l1(b)).unwrap().then(a.cmp(&b)));
            for &r in &order[..drop] {
                let m = &mut masked.layers_mut()[l];
                for w in &mut m.weights[r * layer.in_dim..(r + 1) * layer.in_dim] {
                    *w = 0.0;
                }
                m.bias[r] = 0.0;
            }
        }

        let mut rng = crate::rng::rng_from_seed(2024);
        use rand::Rng;
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
            let a = shrunk.forward_logits(&x).unwrap();
            let b = masked.forward_logits(&x).unwrap();
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() <= 1e-12, "shrunk {u} vs masked {v}");
            }
        }
    }

    #[test]
    fn ladder_keeps_the_maximal_clean_prefix() {
        let (net, train_data, test_data) = fixture();
        let cfg = TrainConfig::adam(0.01, 0, 16, 77); // no retraining: rungs degrade fast
        let ladder = pruning_ladder(
            &net,
            PruneMode::Weight,
            0.2,
            0.03,
            &train_data,
            &test_data,
            &cfg,
        )
        .unwrap();
        let baseline = accuracy(&net, &test_data).unwrap();
        // Recompute every candidate and find the expected cut point.
        let mut expected = Vec::new();
        for (i, f) in [0.2, 0.4, 0.6, 0.8].iter().enumerate() {
            let mut rung_cfg = cfg;
            rung_cfg.seed = derive_seed(cfg.seed, "wp-ladder", i as u64);
            let model = weight_prune(&net, *f, &train_data, &rung_cfg).unwrap();
            let acc = accuracy(&model, &test_data).unwrap();
            if baseline - acc <= 0.03 {
                expected.push(*f);
            } else {
                break;
            }
        }
        let got: Vec<f64> = ladder.iter().map(|r| r.fraction).collect();
        assert_eq!(got, expected);
        for rung in &ladder {
            assert!(baseline - rung.test_accuracy <= 0.03 + 1e-12);
        }
    }

    #[test]
    fn hopeless_accuracy_bound_empties_the_ladder() {
        let (net, train_data, test_data) = fixture();
        let cfg = TrainConfig::adam(0.01, 0, 16, 77);
        let ladder = pruning_ladder(
            &net,
            PruneMode::Weight,
            0.25,
            -1.0,
            &train_data,
            &test_data,
            &cfg,
        )
        .unwrap();
        assert!(ladder.is_empty());
    }

    #[test]
    fn ladder_fractions_are_clean_decimals_for_standard_steps() {
        assert_eq!(ladder_fractions(0.1).len(), 9);
        assert_eq!(ladder_fractions(0.1)[2], 0.3);
        assert_eq!(ladder_fractions(0.25), vec![0.25, 0.5, 0.75]);
        assert_eq!(ladder_fractions(1.0 / 16.0).len(), 15);
    }

    #[test]
    fn default_filter_step_prefers_sixteenths() {
        let (net, _, _) = fixture();
        assert_eq!(default_filter_step(&net), 1.0 / 16.0);
        let odd = Network::from_layers(
            vec![
                Layer::glorot(3, 10, crate::nn::Activation::Relu, &mut crate::rng::rng_from_seed(1)),
                Layer::glorot(10, 2, crate::nn::Activation::Identity, &mut crate::rng::rng_from_seed(2)),
            ],
            "odd",
            "",
        )
        .unwrap();
        assert_eq!(default_filter_step(&odd), 0.1);
    }
}
