//! Bias-corrected Adam with the default constants.

use crate::model::{ModelConfig, ModelParams};

/// Optimizer state: first/second moment tensors shaped like the parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step_count: u64,
    pub first_moment: ModelParams,
    pub second_moment: ModelParams,
    pub eta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
}

impl AdamState {
    pub fn new(config: &ModelConfig) -> Self {
        Self {
            step_count: 0,
            first_moment: ModelParams::zeros(config),
            second_moment: ModelParams::zeros(config),
            eta: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

/// One standard Adam update:
/// `m <- b1*m + (1-b1)*g`, `v <- b2*v + (1-b2)*g^2`,
/// `p <- p - eta * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)`.
pub fn adam_step(params: &mut ModelParams, grads: &ModelParams, state: &mut AdamState) {
    state.step_count += 1;
    let t = state.step_count as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (eta, b1, b2, eps) = (state.eta, state.beta1, state.beta2, state.adam_eps);

    let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= eta * m_hat / (v_hat.sqrt() + eps);
        }
    };

    macro_rules! tensor {
        ($field:ident) => {
            update(
                params.$field.as_slice_mut().unwrap(),
                grads.$field.as_slice().unwrap(),
                state.first_moment.$field.as_slice_mut().unwrap(),
                state.second_moment.$field.as_slice_mut().unwrap(),
            )
        };
    }
    tensor!(pointwise_w);
    tensor!(pointwise_b);
    tensor!(temporal_w);
    tensor!(temporal_b);
    tensor!(bn_gamma);
    tensor!(bn_beta);
    tensor!(dense_w);
    tensor!(dense_b);
}
