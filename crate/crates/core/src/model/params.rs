//! Learnable tensors and their initialisation.

use ndarray::{Array1, Array2};
use rand::Rng;

use super::ModelConfig;
use crate::seed;

/// All learnable tensors of the network.
///
/// Shapes depend on the config's variant; layers absent from a variant hold
/// empty tensors. Everything is stored at double precision; checkpoints
/// serialise as little-endian `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub pointwise_w: Array2<f64>,
    pub pointwise_b: Array1<f64>,
    pub temporal_w: Array2<f64>,
    pub temporal_b: Array1<f64>,
    pub bn_gamma: Array1<f64>,
    pub bn_beta: Array1<f64>,
    pub dense_w: Array2<f64>,
    pub dense_b: Array1<f64>,
}

impl ModelParams {
    /// Zero-filled parameter set with the config's shapes. Also the shape
    /// template for gradients and Adam moments.
    pub fn zeros(config: &ModelConfig) -> Self {
        let (pw_r, pw_c) = config.pointwise_shape();
        let (tw_r, tw_c) = config.temporal_shape();
        let bn = config.bn_channels();
        let feat = config.feature_count();
        Self {
            pointwise_w: Array2::zeros((pw_r, pw_c)),
            pointwise_b: Array1::zeros(pw_r),
            temporal_w: Array2::zeros((tw_r, tw_c)),
            temporal_b: Array1::zeros(tw_r),
            bn_gamma: Array1::zeros(bn),
            bn_beta: Array1::zeros(bn),
            dense_w: Array2::zeros((feat, 2)),
            dense_b: Array1::zeros(2),
        }
    }

    /// Element count across all tensors.
    pub fn n_params(&self) -> usize {
        self.pointwise_w.len()
            + self.pointwise_b.len()
            + self.temporal_w.len()
            + self.temporal_b.len()
            + self.bn_gamma.len()
            + self.bn_beta.len()
            + self.dense_w.len()
            + self.dense_b.len()
    }

    pub fn all_finite(&self) -> bool {
        self.for_each_tensor_all(|t| t.iter().all(|v| v.is_finite()))
    }

    fn for_each_tensor_all(&self, mut f: impl FnMut(&[f64]) -> bool) -> bool {
        f(self.pointwise_w.as_slice().unwrap())
            && f(self.pointwise_b.as_slice().unwrap())
            && f(self.temporal_w.as_slice().unwrap())
            && f(self.temporal_b.as_slice().unwrap())
            && f(self.bn_gamma.as_slice().unwrap())
            && f(self.bn_beta.as_slice().unwrap())
            && f(self.dense_w.as_slice().unwrap())
            && f(self.dense_b.as_slice().unwrap())
    }
}

/// Draw initial parameters: weights uniform in `+-sqrt(6 / fan_in)`, biases
/// zero, `gamma = 1`, `beta = 0`. Deterministic for a given seed.
pub fn init_params(config: &ModelConfig, seed_value: u64) -> ModelParams {
    let mut rng = seed::rng(seed_value, &[0x1_417]);
    let mut params = ModelParams::zeros(config);

    let fan_pointwise = config.in_channels as f64;
    let fan_temporal = match config.variant {
        super::Variant::Conv1d => (config.in_channels * config.kernel_len) as f64,
        _ => config.kernel_len as f64,
    };
    let fan_dense = config.feature_count() as f64;

    fill_uniform(&mut rng, &mut params.pointwise_w, fan_pointwise);
    fill_uniform(&mut rng, &mut params.temporal_w, fan_temporal);
    fill_uniform(&mut rng, &mut params.dense_w, fan_dense);
    params.bn_gamma.fill(1.0);
    params
}

fn fill_uniform(rng: &mut impl Rng, w: &mut Array2<f64>, fan_in: f64) {
    if w.is_empty() {
        return;
    }
    let bound = (6.0 / fan_in).sqrt();
    for v in w.iter_mut() {
        *v = rng.random_range(-bound..=bound);
    }
}
