//! Reverse-mode gradients: input gradients for extraction objectives and
//! parameter gradients for training.

use crate::error::{Error, Result};
use crate::nn::scalar::LogitFn;
use crate::nn::{softmax, Network};

/// Gradient of `f(Z(x))` with respect to the input `x`.
pub fn input_gradient(net: &Network, x: &[f64], f: &LogitFn) -> Result<Vec<f64>> {
    f.validate(net.num_classes())?;
    let (pres, acts) = net.forward_trace(x)?;
    let mut grad = f.grad(acts.last().unwrap());
    for (l, layer) in net.layers().iter().enumerate().rev() {
        let pre = &pres[l];
        // d/d pre = d/d act * act'(pre)
        for r in 0..layer.out_dim {
            grad[r] *= layer.activation.derivative(pre[r]);
        }
        let mut prev = vec![0.0; layer.in_dim];
        for r in 0..layer.out_dim {
            let row = &layer.weights[r * layer.in_dim..(r + 1) * layer.in_dim];
            let g = grad[r];
            if g != 0.0 {
                for (p, w) in prev.iter_mut().zip(row.iter()) {
                    *p += w * g;
                }
            }
        }
        grad = prev;
    }
    if grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("input gradient is non-finite".into()));
    }
    Ok(grad)
}

/// Per-layer parameter gradient buffers, matching a network's shapes.
#[derive(Debug, Clone)]
pub(crate) struct NetGrads {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl NetGrads {
    pub fn zeros(net: &Network) -> NetGrads {
        NetGrads {
            weights: net.layers().iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: net.layers().iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn reset(&mut self) {
        for w in &mut self.weights {
            w.iter_mut().for_each(|v| *v = 0.0);
        }
        for b in &mut self.bias {
            b.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.weights {
            w.iter_mut().for_each(|v| *v *= factor);
        }
        for b in &mut self.bias {
            b.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

/// Accumulate cross-entropy parameter gradients for one example into `grads`;
/// returns the example's loss.
pub(crate) fn accumulate_ce_grads(
    net: &Network,
    x: &[f64],
    label: usize,
    grads: &mut NetGrads,
) -> Result<f64> {
    let (pres, acts) = net.forward_trace(x)?;
    let z = acts.last().unwrap();
    let p = softmax(z);
    let loss = -p[label].max(f64::MIN_POSITIVE).ln();
    let mut grad: Vec<f64> = p;
    grad[label] -= 1.0;
    for (l, layer) in net.layers().iter().enumerate().rev() {
        let pre = &pres[l];
        for r in 0..layer.out_dim {
            grad[r] *= layer.activation.derivative(pre[r]);
        }
        let input = &acts[l];
        for r in 0..layer.out_dim {
            let g = grad[r];
            grads.bias[l][r] += g;
            if g != 0.0 {
                let row = &mut grads.weights[l][r * layer.in_dim..(r + 1) * layer.in_dim];
                for (dst, xi) in row.iter_mut().zip(input.iter()) {
                    *dst += g * xi;
                }
            }
        }
        if l > 0 {
            let mut prev = vec![0.0; layer.in_dim];
            for r in 0..layer.out_dim {
                let g = grad[r];
                if g != 0.0 {
                    let row = &layer.weights[r * layer.in_dim..(r + 1) * layer.in_dim];
                    for (p, w) in prev.iter_mut().zip(row.iter()) {
                        *p += w * g;
                    }
                }
            }
            grad = prev;
        }
    }
    Ok(loss)
}
