use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::policy::{PolicyParams, BLOCKS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Decoupled decay, applied to convolution kernels only.
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig { learning_rate: 5e-5, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, weight_decay: 0.01 }
    }
}

/// Adam with decoupled weight decay over the policy's parameter blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamW {
    config: AdamWConfig,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: u64,
}

impl AdamW {
    pub fn new(config: AdamWConfig, params: &PolicyParams) -> Self {
        let zeros: Vec<Vec<f64>> = params.blocks().iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        AdamW { config, first: zeros.clone(), second: zeros, step: 0 }
    }

    pub fn config(&self) -> &AdamWConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One descent step along `grads` (gradients of the loss).
    pub fn update(&mut self, params: &mut PolicyParams, grads: &[Tensor; BLOCKS]) {
        let AdamWConfig { learning_rate: lr, beta1, beta2, epsilon, weight_decay } = self.config;
        self.step += 1;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for (i, block) in params.blocks_mut().into_iter().enumerate() {
            let decay = if PolicyParams::is_kernel(i) { weight_decay } else { 0.0 };
            let (m, v) = (&mut self.first[i], &mut self.second[i]);
            for (((p, g), m), v) in block.data_mut().iter_mut().zip(grads[i].data()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p -= lr * (m_hat / (v_hat.sqrt() + epsilon) + decay * *p);
            }
        }
    }
}
