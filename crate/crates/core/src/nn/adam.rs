//! Adam optimizer over a flat parameter slice.

use crate::error::{Error, Result};

/// First/second moment estimates plus the step counter. One state drives one
/// parameter block; training keeps a state per layer block, extraction keeps
/// one for the input vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    /// Standard defaults: beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8.
    pub fn new(len: usize) -> AdamState {
        AdamState {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update with bias correction. `params` is updated in place and
/// the state's step counter advances by one.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Input(format!(
            "adam shapes disagree: params {}, grads {}, state {}",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if !lr.is_finite() || lr <= 0.0 {
        return Err(Error::Input("learning rate must be finite and > 0".into()));
    }
    state.t += 1;
    let bc1 = 1.0 - state.beta1.powi(state.t as i32);
    let bc2 = 1.0 - state.beta2.powi(state.t as i32);
    for idx in 0..params.len() {
        let g = grads[idx];
        state.m[idx] = state.beta1 * state.m[idx] + (1.0 - state.beta1) * g;
        state.v[idx] = state.beta2 * state.v[idx] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[idx] / bc1;
        let v_hat = state.v[idx] / bc2;
        params[idx] -= lr * (m_hat / (v_hat.sqrt() + state.epsilon));
    }
    Ok(())
}
