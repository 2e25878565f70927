use serde::{Deserialize, Serialize};

use super::OptimError;
use crate::nn::{ParamStore, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

/// Adam moment estimates, one pair per parameter slot.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub t: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &ParamStore) -> Self {
        let zeros = || params.slots().iter().map(|s| Tensor::zeros(s.value.shape())).collect();
        Self {
            config,
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }

    /// One bias-corrected update of every trainable parameter, then clears gradients.
    ///
    /// `θ ← θ − α·m̂/(√v̂ + ε)` with `m̂ = m/(1−β₁ᵗ)`, `v̂ = v/(1−β₂ᵗ)`.
    pub fn step(&mut self, params: &mut ParamStore) -> Result<(), OptimError> {
        if params.len() != self.m.len() {
            return Err(OptimError::StateMismatch(format!(
                "optimizer tracks {} parameters, model has {}",
                self.m.len(),
                params.len()
            )));
        }
        for s in params.slots() {
            if s.trainable && s.grad.is_none() {
                return Err(OptimError::MissingGradient(s.name.clone()));
            }
        }
        self.t += 1;
        let AdamConfig {
            learning_rate: lr,
            beta1: b1,
            beta2: b2,
            epsilon: eps,
        } = self.config;
        let c1 = 1.0 - b1.powf(self.t as f64);
        let c2 = 1.0 - b2.powf(self.t as f64);
        for (i, slot) in params.slots_mut().iter_mut().enumerate() {
            let Some(grad) = slot.grad.take() else { continue };
            if !slot.trainable {
                continue;
            }
            grad.expect_shape(slot.value.shape())
                .map_err(|e| OptimError::StateMismatch(format!("{}: {e}", slot.name)))?;
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            for (((theta, &g), m), v) in slot.value.data_mut().iter_mut().zip(grad.data()).zip(m).zip(v) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *theta -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Convenience wrapper: `state.step(params)`.
pub fn adam_step(state: &mut AdamState, params: &mut ParamStore) -> Result<(), OptimError> {
    state.step(params)
}
