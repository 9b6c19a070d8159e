//! Analytic gradients of the mean cross-entropy through every layer.
//!
//! Batch-norm statistics are functions of the batch, so their dependence on
//! the inputs is differentiated through (the full three-term rule), not
//! treated as constants.

use ndarray::{Array1, Array2, Array3, Axis};

use crate::error::{Error, Result};
use crate::model::{ForwardCache, ModelConfig, ModelParams, Variant};

/// Gradients of the mean cross-entropy w.r.t. every parameter tensor.
pub fn backward(
    cache: &ForwardCache,
    labels: &[u8],
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<ModelParams> {
    let batch = cache.batch_size();
    if labels.len() != batch || batch == 0 {
        return Err(Error::Shape(format!(
            "backward: batch {batch}, {} labels",
            labels.len()
        )));
    }
    let feat = config.feature_count();
    let gap_len = config.gap_len();
    let mut grads = ModelParams::zeros(config);

    // Softmax cross-entropy: d loss / d logits = (probs - onehot) / batch.
    let mut dlogits = cache.probs.clone();
    for (mut row, &label) in dlogits.rows_mut().into_iter().zip(labels) {
        row[label as usize] -= 1.0;
    }
    dlogits.mapv_inplace(|v| v / batch as f64);

    // Dense layer.
    grads.dense_w = cache.pooled.t().dot(&dlogits);
    grads.dense_b = dlogits.sum_axis(Axis(0));
    let dpooled = dlogits.dot(&params.dense_w.t()); // batch x feat

    // GAP spreads each feature gradient uniformly over time.
    let mut d_gap_in = Array3::zeros((batch, feat, gap_len));
    let inv_len = 1.0 / gap_len as f64;
    for s in 0..batch {
        for i in 0..feat {
            let g = dpooled[[s, i]] * inv_len;
            d_gap_in.index_axis_mut(Axis(0), s).row_mut(i).fill(g);
        }
    }

    match config.variant {
        Variant::Full => {
            let (dgamma, dbeta, d_relu) = batchnorm_backward(
                &d_gap_in,
                &cache.relu_out,
                &cache.bn_mean,
                &cache.bn_var,
                &params.bn_gamma,
                config.bn_epsilon,
            );
            grads.bn_gamma = dgamma;
            grads.bn_beta = dbeta;
            let d_temporal = relu_backward(&d_relu, &cache.temporal_out);
            let (dw, db, d_pointwise) =
                depthwise_backward(&d_temporal, &cache.pointwise_out, &params.temporal_w);
            grads.temporal_w = dw;
            grads.temporal_b = db;
            pointwise_backward(&d_pointwise, &cache.input, &mut grads);
        }
        Variant::NoBatchNorm => {
            let d_temporal = relu_backward(&d_gap_in, &cache.temporal_out);
            let (dw, db, d_pointwise) =
                depthwise_backward(&d_temporal, &cache.pointwise_out, &params.temporal_w);
            grads.temporal_w = dw;
            grads.temporal_b = db;
            pointwise_backward(&d_pointwise, &cache.input, &mut grads);
        }
        Variant::NoPointwise => {
            let (dgamma, dbeta, d_relu) = batchnorm_backward(
                &d_gap_in,
                &cache.relu_out,
                &cache.bn_mean,
                &cache.bn_var,
                &params.bn_gamma,
                config.bn_epsilon,
            );
            grads.bn_gamma = dgamma;
            grads.bn_beta = dbeta;
            let d_temporal = relu_backward(&d_relu, &cache.temporal_out);
            let (dw, db, _) = depthwise_backward(&d_temporal, &cache.input, &params.temporal_w);
            grads.temporal_w = dw;
            grads.temporal_b = db;
        }
        Variant::Conv1d => {
            let (dgamma, dbeta, d_relu) = batchnorm_backward(
                &d_gap_in,
                &cache.relu_out,
                &cache.bn_mean,
                &cache.bn_var,
                &params.bn_gamma,
                config.bn_epsilon,
            );
            grads.bn_gamma = dgamma;
            grads.bn_beta = dbeta;
            let d_temporal = relu_backward(&d_relu, &cache.temporal_out);
            let (dw, db) = conv1d_backward(&d_temporal, &cache.input, config.kernel_len);
            grads.temporal_w = dw;
            grads.temporal_b = db;
        }
        Variant::NoDepthwise => {
            // Order is BN then ReLU: mask against the pre-ReLU (bn_out).
            let d_bn_out = relu_backward(&d_gap_in, &cache.bn_out);
            let (dgamma, dbeta, d_pointwise) = batchnorm_backward(
                &d_bn_out,
                &cache.pointwise_out,
                &cache.bn_mean,
                &cache.bn_var,
                &params.bn_gamma,
                config.bn_epsilon,
            );
            grads.bn_gamma = dgamma;
            grads.bn_beta = dbeta;
            pointwise_backward(&d_pointwise, &cache.input, &mut grads);
        }
    }
    Ok(grads)
}

/// Gradient gate at the ReLU: pass where the pre-activation is positive.
fn relu_backward(d_out: &Array3<f64>, pre_activation: &Array3<f64>) -> Array3<f64> {
    let mut d = d_out.clone();
    for (slot, &pre) in d.iter_mut().zip(pre_activation.iter()) {
        if pre <= 0.0 {
            *slot = 0.0;
        }
    }
    d
}

/// Full batch-norm backward over batch and time positions per channel.
fn batchnorm_backward(
    d_out: &Array3<f64>,
    input: &Array3<f64>,
    mean: &Array1<f64>,
    var: &Array1<f64>,
    gamma: &Array1<f64>,
    eps: f64,
) -> (Array1<f64>, Array1<f64>, Array3<f64>) {
    let (batch, channels, len) = input.dim();
    let m = (batch * len) as f64;
    let mut dgamma = Array1::zeros(channels);
    let mut dbeta = Array1::zeros(channels);
    let mut d_input = Array3::zeros((batch, channels, len));

    let in_all = input.as_slice().expect("standard layout");
    let dout_all = d_out.as_slice().expect("standard layout");
    let din_all = d_input.as_slice_mut().expect("standard layout");

    for i in 0..channels {
        let inv_std = 1.0 / (var[i] + eps).sqrt();
        let mu = mean[i];
        let mut sum_d = 0.0;
        let mut sum_d_xhat = 0.0;
        for s in 0..batch {
            let base = (s * channels + i) * len;
            for j in 0..len {
                let d = dout_all[base + j];
                let xhat = (in_all[base + j] - mu) * inv_std;
                sum_d += d;
                sum_d_xhat += d * xhat;
            }
        }
        dgamma[i] = sum_d_xhat;
        dbeta[i] = sum_d;
        let g = gamma[i];
        let scale = g * inv_std / m;
        for s in 0..batch {
            let base = (s * channels + i) * len;
            for j in 0..len {
                let d = dout_all[base + j];
                let xhat = (in_all[base + j] - mu) * inv_std;
                din_all[base + j] = scale * (m * d - sum_d - xhat * sum_d_xhat);
            }
        }
    }
    (dgamma, dbeta, d_input)
}

/// Gradients through the depthwise convolution, plus the gradient flowing to
/// its input.
fn depthwise_backward(
    d_out: &Array3<f64>,
    input: &Array3<f64>,
    w: &Array2<f64>,
) -> (Array2<f64>, Array1<f64>, Array3<f64>) {
    let (batch, channels, len) = input.dim();
    let (nodes, kernel_len) = w.dim();
    let out_len = len - kernel_len + 1;
    let mut dw = Array2::zeros((nodes, kernel_len));
    let mut db = Array1::zeros(nodes);
    let mut d_input = Array3::zeros((batch, channels, len));

    let in_all = input.as_slice().expect("standard layout");
    let dout_all = d_out.as_slice().expect("standard layout");
    let w_all = w.as_slice().expect("standard layout");
    let din_all = d_input.as_slice_mut().expect("standard layout");
    let dw_all = dw.as_slice_mut().expect("standard layout");

    for s in 0..batch {
        for i in 0..nodes {
            let src_base = (s * channels + i / 2) * len;
            let out_base = (s * nodes + i) * out_len;
            let kernel = &w_all[i * kernel_len..(i + 1) * kernel_len];
            let dw_row = &mut dw_all[i * kernel_len..(i + 1) * kernel_len];
            let mut bias_acc = 0.0;
            for j in 0..out_len {
                let g = dout_all[out_base + j];
                if g == 0.0 {
                    continue;
                }
                bias_acc += g;
                let src = &in_all[src_base + j..src_base + j + kernel_len];
                for (t, &x) in dw_row.iter_mut().zip(src) {
                    *t += g * x;
                }
                let dst = &mut din_all[src_base + j..src_base + j + kernel_len];
                for (t, &k) in dst.iter_mut().zip(kernel) {
                    *t += g * k;
                }
            }
            db[i] += bias_acc;
        }
    }
    (dw, db, d_input)
}

/// Gradients through the full-channel 1-D convolution.
fn conv1d_backward(
    d_out: &Array3<f64>,
    input: &Array3<f64>,
    kernel_len: usize,
) -> (Array2<f64>, Array1<f64>) {
    let (batch, channels, len) = input.dim();
    let nodes = d_out.dim().1;
    let out_len = len - kernel_len + 1;
    let flat = channels * kernel_len;
    let mut dw = Array2::zeros((nodes, flat));
    let mut db = Array1::zeros(nodes);

    let in_all = input.as_slice().expect("standard layout");
    let dout_all = d_out.as_slice().expect("standard layout");
    let dw_all = dw.as_slice_mut().expect("standard layout");

    for s in 0..batch {
        for k in 0..nodes {
            let out_base = (s * nodes + k) * out_len;
            let mut bias_acc = 0.0;
            for j in 0..out_len {
                let g = dout_all[out_base + j];
                if g == 0.0 {
                    continue;
                }
                bias_acc += g;
                for p in 0..channels {
                    let src = &in_all[(s * channels + p) * len + j..][..kernel_len];
                    let taps = &mut dw_all[k * flat + p * kernel_len..][..kernel_len];
                    for (t, &x) in taps.iter_mut().zip(src) {
                        *t += g * x;
                    }
                }
            }
            db[k] += bias_acc;
        }
    }
    (dw, db)
}

/// Gradients through the pointwise layer (input gradient is not needed).
fn pointwise_backward(d_out: &Array3<f64>, input: &Array3<f64>, grads: &mut ModelParams) {
    let batch = input.dim().0;
    for s in 0..batch {
        let d_s = d_out.index_axis(Axis(0), s);
        let x_s = input.index_axis(Axis(0), s);
        grads.pointwise_w = &grads.pointwise_w + &d_s.dot(&x_s.t());
        grads.pointwise_b = &grads.pointwise_b + &d_s.sum_axis(Axis(1));
    }
}
