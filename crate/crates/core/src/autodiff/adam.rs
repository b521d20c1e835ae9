use alloc::vec::Vec;

use super::matrix::Matrix;
use super::params::{ParamId, ParamStore};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam over a fixed group of parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    params: Vec<ParamId>,
    first_moment: Vec<Matrix>,
    second_moment: Vec<Matrix>,
    step_count: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, store: &ParamStore, params: Vec<ParamId>) -> Self {
        let zeros = |id: &ParamId| {
            let (r, c) = store.get(*id).value.shape();
            Matrix::zeros(r, c)
        };
        Self {
            config,
            first_moment: params.iter().map(zeros).collect(),
            second_moment: params.iter().map(zeros).collect(),
            params,
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn params(&self) -> &[ParamId] {
        &self.params
    }

    /// Applies one update from the gradients currently held in `store`.
    /// Gradients are left untouched.
    pub fn step(&mut self, store: &mut ParamStore) {
        self.step_count += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step_count as i32;
        let bc1 = 1.0 - libm::pow(beta1, t as f64);
        let bc2 = 1.0 - libm::pow(beta2, t as f64);
        for (k, id) in self.params.iter().enumerate() {
            let tensor = store.get_mut(*id);
            let m = self.first_moment[k].data_mut();
            let v = self.second_moment[k].data_mut();
            for (i, (w, g)) in tensor
                .value
                .data_mut()
                .iter_mut()
                .zip(tensor.grad.data())
                .enumerate()
            {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                *w -= learning_rate * m_hat / (math::sqrt(v_hat) + eps);
            }
        }
    }
}
