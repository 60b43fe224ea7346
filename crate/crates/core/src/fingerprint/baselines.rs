//! Adversarial-example baselines: FGSM, IGSM, and CW-L2.
//!
//! All three start from the same per-point draws as the boundary walk
//! (initial point, then target label), so runs with a shared seed are
//! directly comparable across methods.

use super::extract::{assemble, check_common, clamp_unit, run_points, PointOut};
use super::{point_rng, select_initial_point, select_target_label, ExtractConfig, Fingerprint, Method};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{adam_step, input_gradient, AdamState, LogitFn, Network};

/// Sign with sign(0) = 0, so zero-gradient coordinates stay untouched.
/// (`f64::signum` maps +0.0 to 1.0, which would shift them.)
pub(super) fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// One signed-gradient step of size epsilon toward the target label,
/// clipped to the unit box. epsilon = 0 returns the initial point bit for
/// bit, which is occasionally useful as a labeled-training-points baseline.
pub fn extract_fgsm(
    target: &Network,
    data: Option<&Dataset>,
    cfg: &ExtractConfig,
) -> Result<Fingerprint> {
    check_common(target, data, cfg)?;
    if !(cfg.epsilon.is_finite() && cfg.epsilon >= 0.0) {
        return Err(Error::Input(format!("epsilon must be >= 0, got {}", cfg.epsilon)));
    }
    let outs = run_points(cfg.n, |p| {
        let mut rng = point_rng(cfg.seed, p);
        let (x0, i) = select_initial_point(target, data, cfg.init, &mut rng)?;
        let j = select_target_label(target, &x0, i, cfg.label, &mut rng)?;
        // Descend the cross-entropy toward j: x' = x0 - eps * sign(grad).
        let g = input_gradient(target, &x0, &LogitFn::CrossEntropy { target: j })?;
        let mut x: Vec<f64> = x0
            .iter()
            .zip(&g)
            .map(|(v, gv)| v - cfg.epsilon * sign(*gv))
            .collect();
        clamp_unit(&mut x);
        let label = target.predict_label(&x)?;
        Ok(PointOut { x, label, converged: label == j, iters: 1 })
    })?;
    Ok(assemble(target, Method::Fgsm, cfg, outs))
}

/// Iterated signed-gradient steps of size alpha, re-clipped after every
/// step to the epsilon ball around the start and to the unit box. Stops at
/// the first iterate the target classifies as j.
pub fn extract_igsm(
    target: &Network,
    data: Option<&Dataset>,
    cfg: &ExtractConfig,
) -> Result<Fingerprint> {
    check_common(target, data, cfg)?;
    if !(cfg.epsilon.is_finite() && cfg.epsilon > 0.0) {
        return Err(Error::Input(format!("epsilon must be > 0, got {}", cfg.epsilon)));
    }
    if !(cfg.alpha.is_finite() && cfg.alpha > 0.0 && cfg.alpha <= cfg.epsilon) {
        return Err(Error::Input(format!(
            "alpha must satisfy 0 < alpha <= epsilon, got alpha {} epsilon {}",
            cfg.alpha, cfg.epsilon
        )));
    }
    if cfg.max_iters == 0 {
        return Err(Error::Input("max_iters must be >= 1".into()));
    }
    let outs = run_points(cfg.n, |p| {
        let mut rng = point_rng(cfg.seed, p);
        let (x0, i) = select_initial_point(target, data, cfg.init, &mut rng)?;
        let j = select_target_label(target, &x0, i, cfg.label, &mut rng)?;
        let f = LogitFn::CrossEntropy { target: j };
        let mut x = x0.clone();
        let mut converged = false;
        let mut iters = cfg.max_iters;
        for t in 1..=cfg.max_iters {
            let g = input_gradient(target, &x, &f)?;
            for (c, v) in x.iter_mut().enumerate() {
                let stepped = *v - cfg.alpha * sign(g[c]);
                *v = stepped
                    .clamp(x0[c] - cfg.epsilon, x0[c] + cfg.epsilon)
                    .clamp(0.0, 1.0);
            }
            if target.predict_label(&x)? == j {
                converged = true;
                iters = t;
                break;
            }
        }
        let label = target.predict_label(&x)?;
        Ok(PointOut { x, label, converged, iters })
    })?;
    Ok(assemble(target, Method::Igsm, cfg, outs))
}

/// CW-L2 with the tanh change of variables. For each trade-off constant c
/// the inner loop minimizes ||x - x0||^2 + c * f(x) with Adam, where
/// f(x) = max(max over t != j of z_t - z_j, -k); success means f(x) <= -k,
/// i.e. class j wins by at least the confidence k. A 6-step binary search
/// doubles c until a success exists, then bisects. The smallest-L2 success
/// across all iterates wins; if nothing succeeds the point is reported
/// unconverged with the best-effort (smallest f) iterate.
pub fn extract_cw(
    target: &Network,
    data: Option<&Dataset>,
    cfg: &ExtractConfig,
) -> Result<Fingerprint> {
    check_common(target, data, cfg)?;
    if !(cfg.lr.is_finite() && cfg.lr > 0.0) {
        return Err(Error::Input(format!("learning rate must be positive, got {}", cfg.lr)));
    }
    if !(cfg.k.is_finite() && cfg.k >= 0.0) {
        return Err(Error::Input(format!("confidence k must be >= 0, got {}", cfg.k)));
    }
    if cfg.cw.binary_search_steps == 0 || cfg.cw.inner_iters == 0 {
        return Err(Error::Input("cw needs at least one search step and one inner iteration".into()));
    }
    if !(cfg.cw.c_init.is_finite() && cfg.cw.c_init > 0.0) {
        return Err(Error::Input(format!("cw c_init must be > 0, got {}", cfg.cw.c_init)));
    }
    let d = target.input_dim();
    let outs = run_points(cfg.n, |p| {
        let mut rng = point_rng(cfg.seed, p);
        let (x0, i) = select_initial_point(target, data, cfg.init, &mut rng)?;
        let j = select_target_label(target, &x0, i, cfg.label, &mut rng)?;
        let f = LogitFn::CwMargin { target: j, confidence: cfg.k };
        // w parameterizes x = (tanh(w) + 1) / 2, keeping iterates in the box.
        let w0: Vec<f64> = x0
            .iter()
            .map(|v| (2.0 * v - 1.0).clamp(-(1.0 - 1e-12), 1.0 - 1e-12).atanh())
            .collect();
        let mut lo = 0.0_f64;
        let mut hi = f64::INFINITY;
        let mut c = cfg.cw.c_init;
        let mut best: Option<(f64, Vec<f64>)> = None; // (l2 squared, x)
        let mut fallback: Option<(f64, Vec<f64>)> = None; // (f value, x)
        let mut total_iters = 0;
        for _ in 0..cfg.cw.binary_search_steps {
            let mut w = w0.clone();
            let mut adam = AdamState::new(d);
            let mut succeeded = false;
            for _ in 0..cfg.cw.inner_iters {
                total_iters += 1;
                let x: Vec<f64> = w.iter().map(|wv| 0.5 * (wv.tanh() + 1.0)).collect();
                let z = target.forward_logits(&x)?;
                let fval = f.value(&z);
                if fval <= -cfg.k {
                    succeeded = true;
                    let l2 = l2_squared(&x, &x0);
                    if best.as_ref().map_or(true, |(b, _)| l2 < *b) {
                        best = Some((l2, x.clone()));
                    }
                }
                if fallback.as_ref().map_or(true, |(b, _)| fval < *b) {
                    fallback = Some((fval, x.clone()));
                }
                let gf = input_gradient(target, &x, &f)?;
                let gw: Vec<f64> = (0..d)
                    .map(|idx| {
                        let dx = 2.0 * (x[idx] - x0[idx]) + c * gf[idx];
                        // d x / d w = (1 - tanh^2) / 2
                        let th = w[idx].tanh();
                        dx * 0.5 * (1.0 - th * th)
                    })
                    .collect();
                adam_step(&mut w, &gw, &mut adam, cfg.lr)?;
            }
            if succeeded {
                hi = c;
            } else {
                lo = c;
            }
            c = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * c };
        }
        let (mut x, converged) = match best {
            Some((_, x)) => (x, true),
            None => (fallback.expect("at least one iterate").1, false),
        };
        clamp_unit(&mut x); // tanh already lands inside; belt and braces
        let label = target.predict_label(&x)?;
        Ok(PointOut { x, label, converged, iters: total_iters })
    })?;
    Ok(assemble(target, Method::Cw, cfg, outs))
}

fn l2_squared(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, Kind, SyntheticSpec};
    use crate::nn::{accuracy, train, Activation, Layer, TrainConfig};

    fn blob_data(d: usize, c: usize, seed: u64) -> Dataset {
        generate(&SyntheticSpec {
            kind: Kind::Blobs,
            n_per_class: 40,
            classes: c,
            dim: d,
            noise_sigma: 0.04,
            seed,
        })
        .unwrap()
    }

    fn trained_net(data: &Dataset, seed: u64) -> Network {
        let net = Network::small_mlp(data.d, data.c, seed).unwrap();
        let cfg = TrainConfig::adam(0.01, 30, 16, seed ^ 0x5eed);
        let out = train(&net, data, &cfg).unwrap();
        assert!(accuracy(&out, data).unwrap() >= 0.95);
        out
    }

    fn linear_two_class() -> Network {
        Network::from_layers(
            vec![Layer {
                in_dim: 2,
                out_dim: 2,
                weights: vec![3.0, 0.0, 0.0, 3.0],
                bias: vec![0.0, 0.0],
                activation: Activation::Identity,
            }],
            "linear2",
            "",
        )
        .unwrap()
    }

    #[test]
    fn sign_treats_zero_as_zero() {
        assert_eq!(sign(3.5), 1.0);
        assert_eq!(sign(-0.2), -1.0);
        assert_eq!(sign(0.0), 0.0);
        assert_eq!(sign(-0.0), 0.0);
    }

    #[test]
    fn fgsm_step_matches_the_closed_form() {
        // Boundary x0 = x1; from (0.8, 0.2) toward j = 1 the cross-entropy
        // gradient is proportional to (softmax - onehot) pushed through the
        // diagonal weights: positive on coord 0, negative on coord 1.
        let net = linear_two_class();
        let data = Dataset::new(vec![vec![0.8, 0.2]], vec![0], 2).unwrap();
        let mut cfg = ExtractConfig::new(4);
        cfg.n = 1;
        cfg.epsilon = 0.1;
        let fp = extract_fgsm(&net, Some(&data), &cfg).unwrap();
        assert_eq!(fp.points[0], vec![0.8 - 0.1, 0.2 + 0.1]);
    }

    #[test]
    fn fgsm_clips_to_the_unit_box() {
        let net = linear_two_class();
        let data = Dataset::new(vec![vec![0.95, 0.05]], vec![0], 2).unwrap();
        let mut cfg = ExtractConfig::new(4);
        cfg.n = 1;
        cfg.epsilon = 0.2;
        let fp = extract_fgsm(&net, Some(&data), &cfg).unwrap();
        assert_eq!(fp.points[0], vec![0.75, 0.25]);
        let data = Dataset::new(vec![vec![0.1, 0.05]], vec![0], 2).unwrap();
        let fp = extract_fgsm(&net, Some(&data), &cfg).unwrap();
        assert_eq!(fp.points[0], vec![0.0, 0.25]);
    }

    #[test]
    fn fgsm_with_zero_epsilon_returns_the_initial_points_bit_for_bit() {
        let data = blob_data(3, 2, 9);
        let net = trained_net(&data, 4);
        let mut cfg = ExtractConfig::new(6);
        cfg.n = 12;
        cfg.epsilon = 0.0;
        let fp = extract_fgsm(&net, Some(&data), &cfg).unwrap();
        for (p, x) in fp.points.iter().enumerate() {
            let mut rng = point_rng(cfg.seed, p);
            let (x0, _) =
                select_initial_point(&net, Some(&data), cfg.init, &mut rng).unwrap();
            assert_eq!(x, &x0);
        }
    }

    #[test]
    fn igsm_honors_the_cumulative_epsilon_ball() {
        let data = blob_data(3, 2, 14);
        let net = trained_net(&data, 6);
        let mut cfg = ExtractConfig::new(8);
        cfg.n = 10;
        cfg.epsilon = 0.05;
        cfg.alpha = 0.01;
        cfg.max_iters = 200;
        let fp = extract_igsm(&net, Some(&data), &cfg).unwrap();
        for (p, x) in fp.points.iter().enumerate() {
            let mut rng = point_rng(cfg.seed, p);
            let (x0, _) =
                select_initial_point(&net, Some(&data), cfg.init, &mut rng).unwrap();
            for (a, b) in x.iter().zip(&x0) {
                assert!((a - b).abs() <= cfg.epsilon + 1e-15);
            }
        }
    }

    #[test]
    fn igsm_success_means_the_target_label_was_reached() {
        let net = linear_two_class();
        let mut cfg = ExtractConfig::new(23);
        cfg.n = 20;
        cfg.init = super::super::InitStrategy::Random;
        cfg.epsilon = 1.0;
        cfg.alpha = 0.05;
        cfg.max_iters = 100;
        let fp = extract_igsm(&net, None, &cfg).unwrap();
        assert!(fp.converged.iter().any(|&c| c));
        for p in 0..fp.n {
            if fp.converged[p] {
                let mut rng = point_rng(cfg.seed, p);
                let (x0, i) =
                    select_initial_point(&net, None, cfg.init, &mut rng).unwrap();
                let j = select_target_label(&net, &x0, i, cfg.label, &mut rng).unwrap();
                assert_eq!(fp.labels[p], j);
            }
        }
    }

    #[test]
    fn igsm_rejects_alpha_above_epsilon() {
        let net = linear_two_class();
        let mut cfg = ExtractConfig::new(1);
        cfg.init = super::super::InitStrategy::Random;
        cfg.alpha = 0.5;
        cfg.epsilon = 0.1;
        assert!(matches!(extract_igsm(&net, None, &cfg), Err(Error::Input(_))));
    }

    #[test]
    fn cw_successes_clear_the_confidence_margin_on_reevaluation() {
        let data = blob_data(3, 3, 25);
        let net = trained_net(&data, 11);
        let mut cfg = ExtractConfig::new(12);
        cfg.n = 10;
        cfg.k = 0.3;
        cfg.lr = 0.05;
        cfg.cw.inner_iters = 200;
        cfg.cw.binary_search_steps = 4;
        let fp = extract_cw(&net, Some(&data), &cfg).unwrap();
        let hits = fp.converged.iter().filter(|&&c| c).count();
        assert!(hits >= 8, "only {hits}/10 cw points converged");
        for p in 0..fp.n {
            if !fp.converged[p] {
                continue;
            }
            let mut rng = point_rng(cfg.seed, p);
            let (x0, i) = select_initial_point(&net, Some(&data), cfg.init, &mut rng).unwrap();
            let j = select_target_label(&net, &x0, i, cfg.label, &mut rng).unwrap();
            let z = net.forward_logits(&fp.points[p]).unwrap();
            let other = z
                .iter()
                .enumerate()
                .filter(|(t, _)| *t != j)
                .map(|(_, v)| *v)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(z[j] - other >= cfg.k - 1e-9, "margin {}", z[j] - other);
            assert_eq!(fp.labels[p], j);
        }
    }

    #[test]
    fn cw_keeps_the_smallest_perturbation_it_finds() {
        // With an enormous c_init the first search step already succeeds and
        // later steps only shrink c; the recorded point must be a success
        // with L2 no larger than any tracked success of the first step.
        let net = linear_two_class();
        let data = Dataset::new(vec![vec![0.9, 0.1]], vec![0], 2).unwrap();
        let mut big = ExtractConfig::new(2);
        big.n = 1;
        big.k = 0.0;
        big.lr = 0.05;
        big.cw.inner_iters = 300;
        big.cw.binary_search_steps = 1;
        let one = extract_cw(&net, Some(&data), &big).unwrap();
        let mut six = big.clone();
        six.cw.binary_search_steps = 6;
        let refined = extract_cw(&net, Some(&data), &six).unwrap();
        assert!(one.converged[0] && refined.converged[0]);
        let d1 = l2_squared(&one.points[0], &[0.9, 0.1]);
        let d6 = l2_squared(&refined.points[0], &[0.9, 0.1]);
        assert!(d6 <= d1 + 1e-12, "more search steps made the noise worse: {d6} vs {d1}");
    }

    #[test]
    fn cw_reports_failures_as_unconverged_best_effort() {
        // One inner iteration cannot move anywhere useful.
        let data = blob_data(3, 2, 31);
        let net = trained_net(&data, 17);
        let mut cfg = ExtractConfig::new(5);
        cfg.n = 6;
        cfg.k = 5.0; // unreachable confidence on a well-trained blob net? keep iters tiny anyway
        cfg.cw.inner_iters = 1;
        cfg.cw.binary_search_steps = 2;
        let fp = extract_cw(&net, Some(&data), &cfg).unwrap();
        for p in 0..fp.n {
            assert_eq!(fp.iters[p], 2);
            // Unconverged points still carry a labeled in-box point.
            assert!(fp.points[p].iter().all(|v| (0.0..=1.0).contains(v)));
        }
        assert!(fp.converged.iter().any(|&c| !c));
    }
}
