//! Differentiable scalar functions of a logit vector.
//!
//! These are the objectives the extractors optimize. Each variant knows its
//! value and its gradient with respect to the logits; `input_gradient`
//! backpropagates that through the network. Conventions at kinks: ReLU takes
//! subgradient 0 at 0, and a tied max takes its first argument (smallest
//! logit index, or the non-constant branch for the two-argument max).

use crate::error::{Error, Result};
use crate::nn::{logsumexp, softmax};

#[derive(Debug, Clone, PartialEq)]
pub enum LogitFn {
    /// Z_index(x).
    Logit { index: usize },
    /// Cross-entropy toward `target`: logsumexp(z) - z[target].
    CrossEntropy { target: usize },
    /// relu(z[i] - z[j] + k) + relu(max_{t != i,j} z[t] - z[i]).
    /// With only two classes the second max is empty and contributes 0.
    IpGuard { i: usize, j: usize, k: f64 },
    /// max(max_{t != target} z[t] - z[target], -k).
    CwMargin { target: usize, confidence: f64 },
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

/// (max value, index) over logits excluding `skip`; ties pick the smallest
/// index. Returns None when every index is skipped.
fn max_excluding(z: &[f64], skip: &[usize]) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (t, v) in z.iter().enumerate() {
        if skip.contains(&t) {
            continue;
        }
        match best {
            Some((bv, _)) if *v <= bv => {}
            _ => best = Some((*v, t)),
        }
    }
    best
}

impl LogitFn {
    /// Check class indices against the logit dimension.
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        let check = |idx: usize, what: &str| {
            if idx >= num_classes {
                Err(Error::Input(format!(
                    "{what} {idx} out of range for {num_classes} classes"
                )))
            } else {
                Ok(())
            }
        };
        match self {
            LogitFn::Logit { index } => check(*index, "logit index"),
            LogitFn::CrossEntropy { target } => check(*target, "target label"),
            LogitFn::IpGuard { i, j, k } => {
                check(*i, "source label")?;
                check(*j, "target label")?;
                if i == j {
                    return Err(Error::Input("source and target label must differ".into()));
                }
                if !k.is_finite() || *k < 0.0 {
                    return Err(Error::Input("margin k must be finite and >= 0".into()));
                }
                Ok(())
            }
            LogitFn::CwMargin { target, confidence } => {
                check(*target, "target label")?;
                if !confidence.is_finite() || *confidence < 0.0 {
                    return Err(Error::Input("confidence must be finite and >= 0".into()));
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        match self {
            LogitFn::Logit { index } => z[*index],
            LogitFn::CrossEntropy { target } => logsumexp(z) - z[*target],
            LogitFn::IpGuard { i, j, k } => {
                let first = relu(z[*i] - z[*j] + k);
                let second = match max_excluding(z, &[*i, *j]) {
                    Some((m, _)) => relu(m - z[*i]),
                    None => 0.0,
                };
                first + second
            }
            LogitFn::CwMargin { target, confidence } => {
                match max_excluding(z, &[*target]) {
                    Some((m, _)) => (m - z[*target]).max(-confidence),
                    None => -confidence,
                }
            }
        }
    }

    /// Gradient with respect to the logits.
    pub fn grad(&self, z: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; z.len()];
        match self {
            LogitFn::Logit { index } => g[*index] = 1.0,
            LogitFn::CrossEntropy { target } => {
                g = softmax(z);
                g[*target] -= 1.0;
            }
            LogitFn::IpGuard { i, j, k } => {
                if z[*i] - z[*j] + k > 0.0 {
                    g[*i] += 1.0;
                    g[*j] -= 1.0;
                }
                if let Some((m, t)) = max_excluding(z, &[*i, *j]) {
                    if m - z[*i] > 0.0 {
                        g[t] += 1.0;
                        g[*i] -= 1.0;
                    }
                }
            }
            LogitFn::CwMargin { target, confidence } => {
                if let Some((m, t)) = max_excluding(z, &[*target]) {
                    // Tie with the constant -k branch takes the first
                    // (logit-difference) argument, so >= here.
                    if m - z[*target] >= -confidence {
                        g[t] += 1.0;
                        g[*target] -= 1.0;
                    }
                }
            }
        }
        g
    }
}
