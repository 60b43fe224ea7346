//! The boundary walk and the random baseline, plus the method dispatcher.

use super::{
    point_rng, select_initial_point, select_target_label, ExtractConfig, ExtractParams,
    Fingerprint, InitStrategy, Method, FINGERPRINT_VERSION,
};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{adam_step, input_gradient, AdamState, LogitFn, Network};
use rayon::prelude::*;

pub(super) struct PointOut {
    pub x: Vec<f64>,
    pub label: usize,
    pub converged: bool,
    pub iters: usize,
}

pub(super) fn clamp_unit(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

pub(super) fn check_common(
    target: &Network,
    data: Option<&Dataset>,
    cfg: &ExtractConfig,
) -> Result<()> {
    if cfg.n == 0 {
        return Err(Error::Input("extraction needs n >= 1 points".into()));
    }
    if cfg.init == InitStrategy::Training {
        let data = data.ok_or_else(|| {
            Error::Input("init strategy T needs a dataset of training examples".into())
        })?;
        if data.d != target.input_dim() {
            return Err(Error::Input(format!(
                "dataset dimension {} does not match network input {}",
                data.d,
                target.input_dim()
            )));
        }
    }
    Ok(())
}

pub(super) fn run_points<F>(n: usize, job: F) -> Result<Vec<PointOut>>
where
    F: Fn(usize) -> Result<PointOut> + Sync + Send,
{
    // Results are assembled by index, so the schedule cannot change them.
    (0..n).into_par_iter().map(job).collect()
}

pub(super) fn assemble(
    target: &Network,
    method: Method,
    cfg: &ExtractConfig,
    outs: Vec<PointOut>,
) -> Fingerprint {
    let mut points = Vec::with_capacity(outs.len());
    let mut labels = Vec::with_capacity(outs.len());
    let mut converged = Vec::with_capacity(outs.len());
    let mut iters = Vec::with_capacity(outs.len());
    for o in outs {
        points.push(o.x);
        labels.push(o.label);
        converged.push(o.converged);
        iters.push(o.iters);
    }
    Fingerprint {
        version: FINGERPRINT_VERSION,
        method,
        params: ExtractParams::from(cfg),
        seed: cfg.seed,
        target_digest: target.digest(),
        n: cfg.n,
        d: target.input_dim(),
        points,
        labels,
        converged,
        iters,
    }
}

/// Run the given extraction method against `target`.
pub fn extract(
    target: &Network,
    data: Option<&Dataset>,
    method: Method,
    cfg: &ExtractConfig,
) -> Result<Fingerprint> {
    match method {
        Method::IpGuard => extract_ipguard(target, data, cfg),
        Method::Random => extract_random(target, cfg),
        Method::Fgsm => super::extract_fgsm(target, data, cfg),
        Method::Igsm => super::extract_igsm(target, data, cfg),
        Method::Cw => super::extract_cw(target, data, cfg),
    }
}

/// Walk each initial point toward the i/j decision boundary by minimizing
/// the margin objective with Adam, projecting into the unit box after each
/// step. A point converges when the objective reaches exactly zero.
pub fn extract_ipguard(
    target: &Network,
    data: Option<&Dataset>,
    cfg: &ExtractConfig,
) -> Result<Fingerprint> {
    check_common(target, data, cfg)?;
    if !(cfg.lr.is_finite() && cfg.lr > 0.0) {
        return Err(Error::Input(format!("learning rate must be positive, got {}", cfg.lr)));
    }
    if !(cfg.k.is_finite() && cfg.k >= 0.0) {
        return Err(Error::Input(format!("margin k must be >= 0, got {}", cfg.k)));
    }
    if cfg.max_iters == 0 {
        return Err(Error::Input("max_iters must be >= 1".into()));
    }
    let d = target.input_dim();
    let outs = run_points(cfg.n, |p| {
        let mut rng = point_rng(cfg.seed, p);
        let (x0, i) = select_initial_point(target, data, cfg.init, &mut rng)?;
        let j = select_target_label(target, &x0, i, cfg.label, &mut rng)?;
        let f = LogitFn::IpGuard { i, j, k: cfg.k };
        let mut x = x0;
        let mut converged = f.value(&target.forward_logits(&x)?) == 0.0;
        let mut iters = 0;
        if !converged {
            let mut adam = AdamState::new(d);
            let mut prev = x.clone();
            iters = cfg.max_iters;
            for t in 1..=cfg.max_iters {
                let g = input_gradient(target, &x, &f)?;
                prev.copy_from_slice(&x);
                adam_step(&mut x, &g, &mut adam, cfg.lr)?;
                clamp_unit(&mut x);
                if f.value(&target.forward_logits(&x)?) == 0.0 {
                    converged = true;
                    iters = t;
                    break;
                }
            }
            if converged && cfg.k == 0.0 {
                x = polish_to_boundary(target, &prev, &x, i, j)?;
            }
        }
        let label = target.predict_label(&x)?;
        Ok(PointOut { x, label, converged, iters })
    })?;
    Ok(assemble(target, Method::IpGuard, cfg, outs))
}

/// Bisect between the last pre-convergence iterate and the converged one,
/// keeping the zero-objective endpoint, until the i/j logits differ by at
/// most 1e-6. Only meaningful at k = 0, where the zero set is the boundary
/// side itself; the returned point still has objective exactly zero.
fn polish_to_boundary(
    target: &Network,
    lo: &[f64],
    hi: &[f64],
    i: usize,
    j: usize,
) -> Result<Vec<f64>> {
    let f = LogitFn::IpGuard { i, j, k: 0.0 };
    let mut lo = lo.to_vec();
    let mut hi = hi.to_vec();
    for _ in 0..200 {
        let z = target.forward_logits(&hi)?;
        if (z[j] - z[i]).abs() <= 1e-6 || lo == hi {
            break;
        }
        let mid: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        if f.value(&target.forward_logits(&mid)?) == 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Baseline: n uniform points in the unit box, labeled by the target.
pub fn extract_random(target: &Network, cfg: &ExtractConfig) -> Result<Fingerprint> {
    if cfg.n == 0 {
        return Err(Error::Input("extraction needs n >= 1 points".into()));
    }
    let outs = run_points(cfg.n, |p| {
        let mut rng = point_rng(cfg.seed, p);
        let (x, _) = select_initial_point(target, None, InitStrategy::Random, &mut rng)?;
        let label = target.predict_label(&x)?;
        Ok(PointOut { x, label, converged: true, iters: 0 })
    })?;
    let mut fixed = cfg.clone();
    fixed.init = InitStrategy::Random;
    Ok(assemble(target, Method::Random, &fixed, outs))
}
