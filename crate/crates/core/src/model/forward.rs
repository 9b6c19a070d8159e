//! Cached forward pass for every variant.

use ndarray::{Array1, Array2, Array3, Axis};

use super::{ModelConfig, ModelParams, Variant};
use crate::error::{Error, Result};

/// Per-layer activations retained for backprop and interpretation.
///
/// Stage fields not produced by a variant are empty arrays. For the `Full`,
/// `Conv1d` and `NoPointwise` variants the order is
/// `temporal_out -> relu_out -> bn_out -> pooled`; `NoDepthwise` normalises
/// first (`bn_out = BN(pointwise_out)`, `relu_out = ReLU(bn_out)`), and
/// `NoBatchNorm` pools `relu_out` directly.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input batch, `batch x m x n`.
    pub input: Array3<f64>,
    /// Pointwise (channel-mixing) output, `batch x N1 x n`.
    pub pointwise_out: Array3<f64>,
    /// Temporal convolution output, `batch x F x (n-l+1)`.
    pub temporal_out: Array3<f64>,
    /// Post-ReLU activations.
    pub relu_out: Array3<f64>,
    /// Post-batch-norm activations.
    pub bn_out: Array3<f64>,
    /// Per-channel batch mean used by the normalisation.
    pub bn_mean: Array1<f64>,
    /// Per-channel (biased) batch variance used by the normalisation.
    pub bn_var: Array1<f64>,
    /// Global-average-pooled features, `batch x F`.
    pub pooled: Array2<f64>,
    /// Dense-layer outputs, `batch x 2`.
    pub logits: Array2<f64>,
    /// Softmax likelihoods, `batch x 2`; class 0 = alert, 1 = drowsy.
    pub probs: Array2<f64>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.input.dim().0
    }

    /// Predicted class per sample: argmax of the likelihoods, ties to class 0.
    pub fn predictions(&self) -> Vec<u8> {
        self.probs
            .rows()
            .into_iter()
            .map(|r| u8::from(r[1] > r[0]))
            .collect()
    }
}

/// Pointwise (1x1) convolution: `out[s,i,j] = sum_p w[i,p] * x[s,p,j] + b[i]`.
///
/// Mixes channels at each time point; the output keeps the input length.
pub fn pointwise_forward(x: &Array3<f64>, w: &Array2<f64>, b: &Array1<f64>) -> Result<Array3<f64>> {
    let (batch, channels, len) = x.dim();
    let (filters, w_channels) = w.dim();
    if w_channels != channels || b.len() != filters {
        return Err(Error::Shape(format!(
            "pointwise: input {channels} channels, weights ({filters},{w_channels}), bias {}",
            b.len()
        )));
    }
    let mut out = Array3::zeros((batch, filters, len));
    for s in 0..batch {
        let xs = x.index_axis(Axis(0), s);
        let mut prod = w.dot(&xs);
        for (mut row, &bias) in prod.rows_mut().into_iter().zip(b.iter()) {
            row.mapv_inplace(|v| v + bias);
        }
        out.index_axis_mut(Axis(0), s).assign(&prod);
    }
    Ok(out)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Depthwise temporal convolution (valid cross-correlation, no padding).
///
/// Two nodes per input channel: node `i` reads input channel `i / 2` and
/// computes `out[s,i,j] = sum_r in[s,i/2,j+r] * w[i,r] + b[i]` over
/// `j in 0..len-l+1`.
pub fn depthwise_forward(
    input: &Array3<f64>,
    w: &Array2<f64>,
    b: &Array1<f64>,
) -> Result<Array3<f64>> {
    let (batch, channels, len) = input.dim();
    let (nodes, kernel_len) = w.dim();
    if nodes != 2 * channels || b.len() != nodes {
        return Err(Error::Shape(format!(
            "depthwise: {channels} input channels need {} nodes, got {nodes}",
            2 * channels
        )));
    }
    if kernel_len > len {
        return Err(Error::Shape(format!(
            "depthwise: kernel {kernel_len} longer than input {len}"
        )));
    }
    let out_len = len - kernel_len + 1;
    let mut out = Array3::zeros((batch, nodes, out_len));
    let src_all = input.as_slice().expect("standard layout");
    let w_all = w.as_slice().expect("standard layout");
    let out_all = out.as_slice_mut().expect("standard layout");
    for s in 0..batch {
        for i in 0..nodes {
            let src_base = (s * channels + i / 2) * len;
            let src = &src_all[src_base..src_base + len];
            let kernel = &w_all[i * kernel_len..(i + 1) * kernel_len];
            let bias = b[i];
            let out_base = (s * nodes + i) * out_len;
            let row = &mut out_all[out_base..out_base + out_len];
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = dot(&src[j..j + kernel_len], kernel) + bias;
            }
        }
    }
    Ok(out)
}

/// Standard 1-D convolution over all channels: row `k` of `w` holds a full
/// kernel flattened as `channel * l + tap`.
pub fn conv1d_forward(
    x: &Array3<f64>,
    w: &Array2<f64>,
    b: &Array1<f64>,
    kernel_len: usize,
) -> Result<Array3<f64>> {
    let (batch, channels, len) = x.dim();
    let (kernels, flat) = w.dim();
    if flat != channels * kernel_len || b.len() != kernels {
        return Err(Error::Shape(format!(
            "conv1d: expected kernels of {} weights, got {flat}",
            channels * kernel_len
        )));
    }
    let out_len = len - kernel_len + 1;
    let mut out = Array3::zeros((batch, kernels, out_len));
    let x_all = x.as_slice().expect("standard layout");
    let w_all = w.as_slice().expect("standard layout");
    let out_all = out.as_slice_mut().expect("standard layout");
    for s in 0..batch {
        for k in 0..kernels {
            let out_base = (s * kernels + k) * out_len;
            let row = &mut out_all[out_base..out_base + out_len];
            for p in 0..channels {
                let src_base = (s * channels + p) * len;
                let src = &x_all[src_base..src_base + len];
                let taps = &w_all[k * flat + p * kernel_len..k * flat + (p + 1) * kernel_len];
                for (j, slot) in row.iter_mut().enumerate() {
                    *slot += dot(&src[j..j + kernel_len], taps);
                }
            }
            let bias = b[k];
            for slot in row.iter_mut() {
                *slot += bias;
            }
        }
    }
    Ok(out)
}

/// Batch normalisation over the current batch only.
///
/// Per channel, mean and (biased) variance are computed across all batch and
/// time positions, then `out = gamma * (x - mean) / sqrt(var + eps) + beta`.
/// Running statistics are never kept.
pub fn batchnorm_forward(
    h: &Array3<f64>,
    gamma: &Array1<f64>,
    beta: &Array1<f64>,
    eps: f64,
) -> Result<(Array3<f64>, Array1<f64>, Array1<f64>)> {
    let (batch, channels, len) = h.dim();
    if gamma.len() != channels || beta.len() != channels {
        return Err(Error::Shape(format!(
            "batchnorm: {channels} channels, gamma {} beta {}",
            gamma.len(),
            beta.len()
        )));
    }
    let m = (batch * len) as f64;
    let mut mean = Array1::zeros(channels);
    let mut var = Array1::zeros(channels);
    let h_all = h.as_slice().expect("standard layout");
    let row = |s: usize, i: usize| &h_all[(s * channels + i) * len..(s * channels + i + 1) * len];
    for i in 0..channels {
        let mut acc = 0.0;
        for s in 0..batch {
            for &v in row(s, i) {
                acc += v;
            }
        }
        let mu = acc / m;
        let mut acc2 = 0.0;
        for s in 0..batch {
            for &v in row(s, i) {
                let d = v - mu;
                acc2 += d * d;
            }
        }
        mean[i] = mu;
        var[i] = acc2 / m;
    }
    let mut out = Array3::zeros((batch, channels, len));
    let out_all = out.as_slice_mut().expect("standard layout");
    for s in 0..batch {
        for i in 0..channels {
            let inv_std = 1.0 / (var[i] + eps).sqrt();
            let (g, be, mu) = (gamma[i], beta[i], mean[i]);
            let base = (s * channels + i) * len;
            for (slot, &v) in out_all[base..base + len].iter_mut().zip(row(s, i)) {
                *slot = g * (v - mu) * inv_std + be;
            }
        }
    }
    Ok((out, mean, var))
}

/// Elementwise `max(x, 0)`.
pub fn relu(h: &Array3<f64>) -> Array3<f64> {
    h.mapv(|v| if v > 0.0 { v } else { 0.0 })
}

/// Global average pooling, dense layer, and softmax.
///
/// `pooled[s,i]` is the time-mean of channel `i`;
/// `logits[s,c] = sum_i w[i,c] * pooled[s,i] + b[c]`; `probs = softmax(logits)`.
pub fn head_forward(
    h: &Array3<f64>,
    dense_w: &Array2<f64>,
    dense_b: &Array1<f64>,
) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>)> {
    let (batch, channels, len) = h.dim();
    if dense_w.dim() != (channels, 2) || dense_b.len() != 2 {
        return Err(Error::Shape(format!(
            "head: {channels} features, dense {:?}",
            dense_w.dim()
        )));
    }
    let mut pooled = Array2::zeros((batch, channels));
    let inv = 1.0 / len as f64;
    let h_all = h.as_slice().expect("standard layout");
    for s in 0..batch {
        for i in 0..channels {
            let base = (s * channels + i) * len;
            let mut acc = 0.0;
            for &v in &h_all[base..base + len] {
                acc += v;
            }
            pooled[[s, i]] = acc * inv;
        }
    }
    let mut logits = pooled.dot(dense_w);
    for mut row in logits.rows_mut() {
        row[0] += dense_b[0];
        row[1] += dense_b[1];
    }
    let probs = softmax_rows(&logits);
    Ok((pooled, logits, probs))
}

/// Row-wise stable softmax.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Full forward pass with variant dispatch; caches every intermediate.
pub fn forward(
    x: &Array3<f64>,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<ForwardCache> {
    config.validate()?;
    let (batch, channels, len) = x.dim();
    if batch == 0 {
        return Err(Error::Invalid("empty batch".into()));
    }
    if channels != config.in_channels || len != config.in_len {
        return Err(Error::Shape(format!(
            "input {channels}x{len}, config expects {}x{}",
            config.in_channels, config.in_len
        )));
    }

    let empty3 = Array3::zeros((0, 0, 0));
    let (pointwise_out, temporal_out, relu_out, bn_out, bn_mean, bn_var, gap_in);
    match config.variant {
        Variant::Full | Variant::NoBatchNorm => {
            let h1 = pointwise_forward(x, &params.pointwise_w, &params.pointwise_b)?;
            let h2 = depthwise_forward(&h1, &params.temporal_w, &params.temporal_b)?;
            let h3 = relu(&h2);
            if config.variant == Variant::NoBatchNorm {
                gap_in = h3.clone();
                pointwise_out = h1;
                temporal_out = h2;
                relu_out = h3;
                bn_out = empty3;
                bn_mean = Array1::zeros(0);
                bn_var = Array1::zeros(0);
            } else {
                let (h4, mean, var) =
                    batchnorm_forward(&h3, &params.bn_gamma, &params.bn_beta, config.bn_epsilon)?;
                gap_in = h4.clone();
                pointwise_out = h1;
                temporal_out = h2;
                relu_out = h3;
                bn_out = h4;
                bn_mean = mean;
                bn_var = var;
            }
        }
        Variant::Conv1d => {
            let h2 = conv1d_forward(x, &params.temporal_w, &params.temporal_b, config.kernel_len)?;
            let h3 = relu(&h2);
            let (h4, mean, var) =
                batchnorm_forward(&h3, &params.bn_gamma, &params.bn_beta, config.bn_epsilon)?;
            gap_in = h4.clone();
            pointwise_out = empty3;
            temporal_out = h2;
            relu_out = h3;
            bn_out = h4;
            bn_mean = mean;
            bn_var = var;
        }
        Variant::NoPointwise => {
            let h2 = depthwise_forward(x, &params.temporal_w, &params.temporal_b)?;
            let h3 = relu(&h2);
            let (h4, mean, var) =
                batchnorm_forward(&h3, &params.bn_gamma, &params.bn_beta, config.bn_epsilon)?;
            gap_in = h4.clone();
            pointwise_out = empty3;
            temporal_out = h2;
            relu_out = h3;
            bn_out = h4;
            bn_mean = mean;
            bn_var = var;
        }
        Variant::NoDepthwise => {
            let h1 = pointwise_forward(x, &params.pointwise_w, &params.pointwise_b)?;
            let (h_bn, mean, var) =
                batchnorm_forward(&h1, &params.bn_gamma, &params.bn_beta, config.bn_epsilon)?;
            let h_relu = relu(&h_bn);
            gap_in = h_relu.clone();
            pointwise_out = h1;
            temporal_out = empty3;
            relu_out = h_relu;
            bn_out = h_bn;
            bn_mean = mean;
            bn_var = var;
        }
    }

    let (pooled, logits, probs) = head_forward(&gap_in, &params.dense_w, &params.dense_b)?;
    Ok(ForwardCache {
        input: x.clone(),
        pointwise_out,
        temporal_out,
        relu_out,
        bn_out,
        bn_mean,
        bn_var,
        pooled,
        logits,
        probs,
    })
}
