use serde::{Deserialize, Serialize};

use super::{EmbeddingModel, Real, SparseGrads};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
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
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update at step `t` (1-based) of the touched
/// columns only; moments of untouched parameters stay as they are.
pub fn adam_step<F: Real>(model: &mut EmbeddingModel<F>, grads: &SparseGrads<F>, t: u64, config: &AdamConfig) {
    assert!(t >= 1, "Adam steps are 1-based");
    let c = |x: f64| F::from_f64(x).unwrap();
    let (b1, b2) = (c(config.beta1), c(config.beta2));
    let (one_minus_b1, one_minus_b2) = (c(1.0 - config.beta1), c(1.0 - config.beta2));
    let exponent = i32::try_from(t).unwrap_or(i32::MAX);
    let bias1 = c(1.0 - config.beta1.powi(exponent));
    let bias2 = c(1.0 - config.beta2.powi(exponent));
    let (lr, eps) = (c(config.learning_rate), c(config.epsilon));

    for g in grads.iter() {
        let cols = g.cols.clone();
        let moments = model.moments_mut(g.block);
        let first = &mut moments.first.row_mut(g.row)[cols.clone()];
        let second = &mut moments.second.row_mut(g.row)[cols.clone()];
        let mut deltas = Vec::with_capacity(cols.len());
        for ((m, v), &grad) in first.iter_mut().zip(second.iter_mut()).zip(&g.values[cols.clone()]) {
            *m = b1 * *m + one_minus_b1 * grad;
            *v = b2 * *v + one_minus_b2 * grad * grad;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            deltas.push(lr * m_hat / (v_hat.sqrt() + eps));
        }
        for (p, d) in model.block_mut(g.block).row_mut(g.row)[cols].iter_mut().zip(deltas) {
            *p -= d;
        }
    }
    model.step = t;
}
