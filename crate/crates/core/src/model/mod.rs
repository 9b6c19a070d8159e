//! The compact separable-convolution network and its ablation variants.
//!
//! The full architecture processes a `30 x 384` EEG window in a
//! spatial-temporal sequence:
//!
//! ```text
//! (30,384) -pointwise-> (16,384) -depthwise-> (32,321) -ReLU-> (32,321)
//!          -batchnorm-> (32,321) -GAP-> (32) -dense-> (2) -softmax-> (2)
//! ```
//!
//! The pointwise layer mixes channels at each time point (a learned spatial
//! filter bank); the depthwise layer applies two length-64 temporal kernels to
//! each mixed channel with no cross-channel mixing. Batch normalisation always
//! uses the statistics of the current batch: there are no running averages, at
//! training or inference time. A single-sample forward therefore normalises
//! over the time dimension of that sample alone.
//!
//! Indexing is 0-based throughout. Where the architecture is described in
//! 1-based terms ("depthwise node `i` reads input channel `ceil(i/2)`"), the
//! 0-based mapping is: node `i` reads input channel `i / 2` (floor division).

mod checkpoint;
mod forward;
mod params;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use forward::{
    batchnorm_forward, conv1d_forward, depthwise_forward, forward, head_forward, pointwise_forward,
    relu, softmax_rows, ForwardCache,
};
pub use params::{init_params, ModelParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture variants compared in the ablation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Pointwise + depthwise separable convolution (the proposed model).
    Full,
    /// A single standard convolution layer: `2*N1` kernels spanning all input
    /// channels with temporal length `kernel_len`.
    Conv1d,
    /// Pointwise layer only; GAP is applied to `ReLU(BatchNorm(h1))`.
    NoDepthwise,
    /// Depthwise layer only, two nodes per raw input channel.
    NoPointwise,
    /// Full separable stack with the batch normalisation layer removed.
    NoBatchNorm,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Full,
        Variant::Conv1d,
        Variant::NoDepthwise,
        Variant::NoPointwise,
        Variant::NoBatchNorm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Conv1d => "conv1d",
            Variant::NoDepthwise => "no_depthwise",
            Variant::NoPointwise => "no_pointwise",
            Variant::NoBatchNorm => "no_batchnorm",
        }
    }

    pub fn parse(s: &str) -> Result<Variant> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown variant '{s}'")))
    }
}

/// Network geometry and variant selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Input channels (EEG electrodes), `m`.
    pub in_channels: usize,
    /// Input length in sample points, `n`.
    pub in_len: usize,
    /// Pointwise filter count, `N1`.
    pub pointwise_filters: usize,
    /// Temporal kernel length, `l`.
    pub kernel_len: usize,
    pub variant: Variant,
    pub bn_epsilon: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            in_channels: 30,
            in_len: 384,
            pointwise_filters: 16,
            kernel_len: 64,
            variant: Variant::Full,
            bn_epsilon: 1e-5,
        }
    }
}

impl ModelConfig {
    /// Default geometry with the given variant.
    pub fn with_variant(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    /// Tiny geometry used by gradient checks.
    pub fn tiny(variant: Variant) -> Self {
        Self {
            in_channels: 3,
            in_len: 10,
            pointwise_filters: 2,
            kernel_len: 3,
            variant,
            bn_epsilon: 1e-5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.pointwise_filters == 0 {
            return Err(Error::Invalid("channel counts must be positive".into()));
        }
        if self.kernel_len == 0 || self.kernel_len > self.in_len {
            return Err(Error::Invalid(format!(
                "kernel_len {} must be in 1..={}",
                self.kernel_len, self.in_len
            )));
        }
        if !(self.bn_epsilon > 0.0) {
            return Err(Error::Invalid("bn_epsilon must be positive".into()));
        }
        Ok(())
    }

    /// Output length of a valid temporal convolution, `n - l + 1`.
    pub fn conv_out_len(&self) -> usize {
        self.in_len - self.kernel_len + 1
    }

    /// Channel count entering GAP and the dense layer.
    pub fn feature_count(&self) -> usize {
        match self.variant {
            Variant::Full | Variant::NoBatchNorm | Variant::Conv1d => 2 * self.pointwise_filters,
            Variant::NoPointwise => 2 * self.in_channels,
            Variant::NoDepthwise => self.pointwise_filters,
        }
    }

    /// Time length entering GAP.
    pub fn gap_len(&self) -> usize {
        match self.variant {
            Variant::NoDepthwise => self.in_len,
            _ => self.conv_out_len(),
        }
    }

    /// Shape of the pointwise weight matrix, `(filters, in_channels)`.
    pub fn pointwise_shape(&self) -> (usize, usize) {
        match self.variant {
            Variant::Full | Variant::NoBatchNorm | Variant::NoDepthwise => {
                (self.pointwise_filters, self.in_channels)
            }
            _ => (0, 0),
        }
    }

    /// Shape of the temporal weight matrix.
    ///
    /// Depthwise rows hold one length-`l` kernel each; `Conv1d` rows hold a
    /// full-channel kernel flattened as `channel * l + tap`.
    pub fn temporal_shape(&self) -> (usize, usize) {
        match self.variant {
            Variant::Full | Variant::NoBatchNorm => (2 * self.pointwise_filters, self.kernel_len),
            Variant::Conv1d => (
                2 * self.pointwise_filters,
                self.in_channels * self.kernel_len,
            ),
            Variant::NoPointwise => (2 * self.in_channels, self.kernel_len),
            Variant::NoDepthwise => (0, 0),
        }
    }

    /// Batch-normalised channel count (0 when the layer is removed).
    pub fn bn_channels(&self) -> usize {
        match self.variant {
            Variant::NoBatchNorm => 0,
            _ => self.feature_count(),
        }
    }
}
