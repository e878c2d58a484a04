use super::mlp::{Layer, MlpParams};
use crate::scalar::Real;

pub const DEFAULT_LEARNING_RATE: f64 = 0.001;

/// Adam optimizer state for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F> {
    pub first_moment: Vec<Layer<F>>,
    pub second_moment: Vec<Layer<F>>,
    pub step: u64,
    pub learning_rate: F,
    pub beta1: F,
    pub beta2: F,
    pub epsilon: F,
}

impl<F: Real> AdamState<F> {
    /// Zeroed moments shaped like `params` with the usual `beta1 = 0.9, beta2 = 0.999, eps = 1e-8`.
    pub fn new(params: &MlpParams<F>, learning_rate: F) -> Self {
        Self {
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            step: 0,
            learning_rate,
            beta1: F::lit(0.9),
            beta2: F::lit(0.999),
            epsilon: F::lit(1e-8),
        }
    }

    /// One bias-corrected Adam step.
    pub fn apply(&mut self, params: &mut MlpParams<F>, grads: &[Layer<F>]) {
        self.step += 1;
        let t = i32::try_from(self.step).unwrap_or(i32::MAX);
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = F::one() - b1.powi(t);
        let c2 = F::one() - b2.powi(t);
        let lr = self.learning_rate;
        let eps = self.epsilon;
        for (((layer, g), m), v) in params
            .layers
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            for (((p, &gi), mi), vi) in layer
                .params_mut()
                .zip(g.params())
                .zip(m.params_mut())
                .zip(v.params_mut())
            {
                *mi = b1 * *mi + (F::one() - b1) * gi;
                *vi = b2 * *vi + (F::one() - b2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
