//! Bias-corrected Adam, used to turn a raw gradient into an update direction.

use crate::error::{Error, Result};

/// Learning rate for the discrete (assignment) update direction.
pub const DEFAULT_V_STEP_LR: f64 = 3e-3;
/// Learning rate for continuous value-set updates.
pub const DEFAULT_P_STEP_LR: f64 = 3e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
}

impl AdamState {
    /// Zero moments with `beta1 = 0.9`, `beta2 = 0.95`, `epsilon = 1e-8`.
    pub fn new(dim: usize, learning_rate: f64) -> Self {
        Self {
            first_moment: vec![0.0; dim],
            second_moment: vec![0.0; dim],
            step_count: 0,
            beta1: 0.9,
            beta2: 0.95,
            epsilon: 1e-8,
            learning_rate,
        }
    }

    pub fn dim(&self) -> usize {
        self.first_moment.len()
    }

    pub fn reset(&mut self) {
        self.first_moment.iter_mut().for_each(|m| *m = 0.0);
        self.second_moment.iter_mut().for_each(|v| *v = 0.0);
        self.step_count = 0;
    }
}

/// Advances the moments with `grad` and returns the displacement
/// `−lr · m̂ / (√v̂ + ε)`, so the updated dense point is `x + displacement`.
pub fn adam_direction(state: &mut AdamState, grad: &[f64]) -> Result<Vec<f64>> {
    if grad.len() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), found: grad.len() });
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let bias1 = 1.0 - state.beta1.powi(t);
    let bias2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, eps, lr) = (state.beta1, state.beta2, state.epsilon, state.learning_rate);
    let out = state
        .first_moment
        .iter_mut()
        .zip(state.second_moment.iter_mut())
        .zip(grad)
        .map(|((m, v), &g)| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            -lr * m_hat / (v_hat.sqrt() + eps)
        })
        .collect();
    Ok(out)
}
