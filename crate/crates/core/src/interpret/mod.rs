//! Sample-wise interpretation: class activation map, top-location ranking,
//! back-tracing through the separable layers, and Gaussian heatmap synthesis.
//!
//! The activation map entry `(i, j)` is the dense weight for the predicted
//! class times the post-batch-norm activation at that node and time. The ReLU
//! and batch-norm layers are element-wise, so a location selected on the
//! normalised activations indexes the same position in the depthwise output;
//! tracing therefore only has to invert the two convolutions: node `i` reads
//! mixed channel `i/2`, and the strongest contributing input channel is the
//! argmax over channels of the mixing weight times the kernel-correlated
//! input episode. The traced time is the episode centre `j + (l-1)/2`, kept
//! fractional.

mod render;

pub use render::{write_heatmap_artifacts, InterpretationContext};

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::model::{forward, ForwardCache, ModelConfig, ModelParams, Variant};

/// Gaussian radius for heatmap synthesis (half the kernel length).
pub const DEFAULT_SIGMA: f64 = 32.0;
/// Number of discriminative locations traced per sample.
pub const DEFAULT_TOP_N: usize = 100;

/// Per-class contribution map over the final convolutional activations.
#[derive(Debug, Clone)]
pub struct ActivationMap {
    /// `2*N1 x (n-l+1)` contribution values.
    pub values: Array2<f64>,
    /// Class the map explains (0 = alert, 1 = drowsy).
    pub class_label: u8,
}

/// A traced discriminative location. Indices are 0-based; `time_center` is
/// fractional (`time + (l-1)/2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminativeLocation {
    pub node: usize,
    pub time: usize,
    pub value: f64,
    pub channel: usize,
    pub time_center: f64,
}

/// Input-space importance map.
#[derive(Debug, Clone)]
pub struct Heatmap {
    /// Min-max normalised map on `[-1, 1]`, `30 x 384`.
    pub map: Array2<f64>,
    /// Raw Gaussian sums before normalisation.
    pub raw: Array2<f64>,
    /// Time-mean of the normalised map per channel.
    pub channel_summary: Vec<f64>,
    pub class_label: u8,
    pub sigma: f64,
    pub top_n: usize,
    /// Set when the raw map was uniform (all entries forced to -1).
    pub degenerate: bool,
}

impl Heatmap {
    /// The defined degenerate output: zero raw map, every normalised entry
    /// -1, flag set.
    pub fn flat(class_label: u8, sigma: f64) -> Self {
        use crate::dataset::{CHANNELS, WINDOW_LEN};
        Self {
            map: Array2::from_elem((CHANNELS, WINDOW_LEN), -1.0),
            raw: Array2::zeros((CHANNELS, WINDOW_LEN)),
            channel_summary: vec![-1.0; CHANNELS],
            class_label,
            sigma,
            top_n: 0,
            degenerate: true,
        }
    }
}

/// Full interpretation output for one sample.
#[derive(Debug, Clone)]
pub struct Interpretation {
    pub heatmap: Heatmap,
    pub predicted: u8,
    /// `[p(alert), p(drowsy)]` from the forward pass.
    pub likelihoods: [f64; 2],
    pub locations: Vec<DiscriminativeLocation>,
}

/// `values[i][j] = dense_w[i][class] * bn_out[0][i][j]` for a single-sample
/// cache.
pub fn class_activation_map(
    cache: &ForwardCache,
    params: &ModelParams,
    class: u8,
) -> Result<ActivationMap> {
    if class > 1 {
        return Err(Error::Invalid(format!("class {class} not in {{0,1}}")));
    }
    if cache.batch_size() != 1 {
        return Err(Error::Invalid(
            "activation map needs a single-sample cache".into(),
        ));
    }
    if cache.bn_out.is_empty() {
        return Err(Error::Invalid(
            "activation map needs batch-normalised activations".into(),
        ));
    }
    let h4 = cache.bn_out.index_axis(Axis(0), 0);
    let (feat, len) = h4.dim();
    let mut values = Array2::zeros((feat, len));
    for i in 0..feat {
        let w = params.dense_w[[i, class as usize]];
        for j in 0..len {
            values[[i, j]] = w * h4[[i, j]];
        }
    }
    Ok(ActivationMap {
        values,
        class_label: class,
    })
}

/// The `n` largest map entries in descending order; ties break toward the
/// smaller node index, then the smaller time index.
pub fn top_locations(map: &ActivationMap, n: usize) -> Result<Vec<(usize, usize, f64)>> {
    let total = map.values.len();
    if n > total {
        return Err(Error::Invalid(format!(
            "requested {n} locations from a {total}-entry map"
        )));
    }
    let mut entries: Vec<(usize, usize, f64)> = map
        .values
        .indexed_iter()
        .map(|((i, j), &v)| (i, j, v))
        .collect();
    entries.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    entries.truncate(n);
    Ok(entries)
}

/// Trace one activation-map location back to the input: the strongest
/// contributing channel and the episode centre.
pub fn trace_location(
    node: usize,
    time: usize,
    x: &Array2<f64>,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<(usize, f64)> {
    let (channels, len) = x.dim();
    let kernel_len = config.kernel_len;
    if node >= params.temporal_w.nrows() || time + kernel_len > len {
        return Err(Error::Invalid(format!(
            "location ({node}, {time}) outside the activation map"
        )));
    }
    let mixed = node / 2;
    let kernel = params.temporal_w.row(node);
    let kernel = kernel.as_slice().unwrap();
    let x_all = x.as_slice().expect("standard layout");

    let mut best_channel = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for p in 0..channels {
        let episode = &x_all[p * len + time..p * len + time + kernel_len];
        let mut corr = 0.0;
        for (xv, wv) in episode.iter().zip(kernel) {
            corr += xv * wv;
        }
        let score = params.pointwise_w[[mixed, p]] * corr;
        if score > best_score {
            best_score = score;
            best_channel = p;
        }
    }
    Ok((best_channel, time as f64 + (kernel_len as f64 - 1.0) / 2.0))
}

/// Combine traced points into an input-space heatmap.
///
/// `raw[p][q] = 1/(sigma*sqrt(2*pi)) * sum_{k: p_k = p} exp(-(q - q_k)^2 / (2*sigma^2))`
/// over integer `q`, then the whole map is affinely rescaled so its minimum
/// reads -1 and its maximum +1. A uniform raw map (possible when the dense
/// column is all zero) is reported as all -1 with the degenerate flag.
pub fn build_heatmap(locations: &[(usize, f64)], sigma: f64, class_label: u8) -> Result<Heatmap> {
    use crate::dataset::{CHANNELS, WINDOW_LEN};
    if locations.is_empty() {
        return Err(Error::Invalid("no locations to combine".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::Invalid("sigma must be positive".into()));
    }
    for &(p, q) in locations {
        if p >= CHANNELS || !(0.0..=(WINDOW_LEN as f64 - 0.5)).contains(&q) {
            return Err(Error::Invalid(format!(
                "traced point ({p}, {q}) outside the input geometry"
            )));
        }
    }
    let amplitude = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let mut raw = Array2::zeros((CHANNELS, WINDOW_LEN));
    for &(p, qk) in locations {
        for q in 0..WINDOW_LEN {
            let d = q as f64 - qk;
            raw[[p, q]] += amplitude * (-0.5 * d * d / (sigma * sigma)).exp();
        }
    }

    let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let degenerate = max - min <= 0.0;
    let map = if degenerate {
        Array2::from_elem((CHANNELS, WINDOW_LEN), -1.0)
    } else {
        raw.mapv(|v| -1.0 + 2.0 * (v - min) / (max - min))
    };
    let channel_summary = map
        .rows()
        .into_iter()
        .map(|r| r.sum() / WINDOW_LEN as f64)
        .collect();
    Ok(Heatmap {
        map,
        raw,
        channel_summary,
        class_label,
        sigma,
        top_n: locations.len(),
        degenerate,
    })
}

/// Run the whole pipeline on one sample: forward, map the predicted class,
/// rank, trace, and synthesise the heatmap.
///
/// The forward pass normalises over this sample's own time axis, which makes
/// the pooled features equal `beta` exactly: the batch-of-one likelihoods
/// depend only on the learned offsets, not on the input. Callers that know
/// the class assigned by a batched evaluation should prefer
/// [`interpret_sample_for_class`].
pub fn interpret_sample(
    x: &Array2<f64>,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<Interpretation> {
    interpret_with(x, params, config, None)
}

/// As [`interpret_sample`], but explain a caller-chosen class (typically the
/// prediction of the evaluation protocol that scored this sample).
pub fn interpret_sample_for_class(
    x: &Array2<f64>,
    params: &ModelParams,
    config: &ModelConfig,
    class: u8,
) -> Result<Interpretation> {
    if class > 1 {
        return Err(Error::Invalid(format!("class {class} not in {{0,1}}")));
    }
    interpret_with(x, params, config, Some(class))
}

fn interpret_with(
    x: &Array2<f64>,
    params: &ModelParams,
    config: &ModelConfig,
    class_override: Option<u8>,
) -> Result<Interpretation> {
    if config.variant != Variant::Full {
        return Err(Error::Invalid(format!(
            "interpretation is defined for the full architecture, not {}",
            config.variant.name()
        )));
    }
    let batch = x.clone().insert_axis(Axis(0));
    let cache = forward(&batch, params, config)?;
    let probs = [cache.probs[[0, 0]], cache.probs[[0, 1]]];
    let predicted = class_override.unwrap_or_else(|| u8::from(probs[1] > probs[0]));

    let map = class_activation_map(&cache, params, predicted)?;
    let lo = map.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = map.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.0 {
        // Flat activation map (e.g. a zeroed dense column): there is nothing
        // to rank or trace, so report the defined all -1 heatmap.
        return Ok(Interpretation {
            heatmap: Heatmap::flat(predicted, DEFAULT_SIGMA),
            predicted,
            likelihoods: probs,
            locations: Vec::new(),
        });
    }
    let n = DEFAULT_TOP_N.min(map.values.len());
    let ranked = top_locations(&map, n)?;
    let mut locations = Vec::with_capacity(ranked.len());
    for (node, time, value) in ranked {
        let (channel, time_center) = trace_location(node, time, x, params, config)?;
        locations.push(DiscriminativeLocation {
            node,
            time,
            value,
            channel,
            time_center,
        });
    }
    let points: Vec<(usize, f64)> = locations
        .iter()
        .map(|l| (l.channel, l.time_center))
        .collect();
    let heatmap = build_heatmap(&points, DEFAULT_SIGMA, predicted)?;
    Ok(Interpretation {
        heatmap,
        predicted,
        likelihoods: probs,
        locations,
    })
}
