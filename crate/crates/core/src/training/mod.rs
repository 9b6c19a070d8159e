//! Loss, exact gradients, Adam, and the mini-batch training loop.

mod adam;
mod backward;

pub use adam::{adam_step, AdamState};
pub use backward::backward;

use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use rand::seq::SliceRandom;

use crate::dataset::{DatasetBundle, CHANNELS, WINDOW_LEN};
use crate::error::{Error, Result};
use crate::model::{forward, init_params, ModelConfig, ModelParams};
use crate::seed;

/// Mini-batch size used throughout.
pub const BATCH_SIZE: usize = 50;

const TAG_SHUFFLE: u64 = 0x7_F17;

/// Mean softmax cross-entropy, computed in log-sum-exp form from the logits.
pub fn cross_entropy_loss(logits: &Array2<f64>, labels: &[u8]) -> Result<f64> {
    let (batch, classes) = logits.dim();
    if classes != 2 || labels.len() != batch || batch == 0 {
        return Err(Error::Shape(format!(
            "loss: logits {batch}x{classes}, {} labels",
            labels.len()
        )));
    }
    let mut total = 0.0;
    for (row, &label) in logits.rows().into_iter().zip(labels) {
        if label > 1 {
            return Err(Error::Invalid(format!("label {label} not in {{0,1}}")));
        }
        let max = row[0].max(row[1]);
        let lse = max + ((row[0] - max).exp() + (row[1] - max).exp()).ln();
        total += lse - row[label as usize];
    }
    Ok(total / batch as f64)
}

/// Per-epoch training statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean training loss over the epoch's batches.
    pub loss: f64,
    /// Training accuracy over the epoch's batches (pre-update predictions).
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub wall_time_s: f64,
    pub seed: u64,
}

impl TrainReport {
    /// CSV with header `epoch,loss,acc`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("epoch,loss,acc\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{}\n", e.epoch, e.loss, e.accuracy));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Train for a fixed number of epochs. Samples are reshuffled every epoch
/// from a seed-derived stream, split into batches of 50 (the final short
/// batch is kept), and each batch runs forward -> backward -> Adam.
pub fn fit(
    train: &DatasetBundle,
    config: &ModelConfig,
    epochs: usize,
    seed_value: u64,
) -> Result<(ModelParams, TrainReport)> {
    fit_with(train, config, epochs, seed_value, |_, _| Ok(()))
}

/// [`fit`] with a per-epoch callback (used by the evaluation harness to score
/// the held-out subject after every epoch).
pub fn fit_with(
    train: &DatasetBundle,
    config: &ModelConfig,
    epochs: usize,
    seed_value: u64,
    mut after_epoch: impl FnMut(usize, &ModelParams) -> Result<()>,
) -> Result<(ModelParams, TrainReport)> {
    if epochs == 0 {
        return Err(Error::Invalid("epochs must be at least 1".into()));
    }
    if train.samples.is_empty() {
        return Err(Error::Invalid("empty training set".into()));
    }
    if config.in_channels != CHANNELS || config.in_len != WINDOW_LEN {
        return Err(Error::Shape(format!(
            "config geometry {}x{} does not match dataset {CHANNELS}x{WINDOW_LEN}",
            config.in_channels, config.in_len
        )));
    }
    let started = Instant::now();
    let mut params = init_params(config, seed_value);
    let mut state = AdamState::new(config);
    let n = train.samples.len();
    let mut stats = Vec::with_capacity(epochs);

    for epoch in 1..=epochs {
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = seed::rng(seed_value, &[TAG_SHUFFLE, epoch as u64]);
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for chunk in order.chunks(BATCH_SIZE) {
            let (x, labels) = train.batch(chunk);
            let cache = forward(&x, &params, config)?;
            let loss = cross_entropy_loss(&cache.logits, &labels)?;
            if !loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite loss at epoch {epoch}"
                )));
            }
            correct += cache
                .predictions()
                .iter()
                .zip(&labels)
                .filter(|(p, l)| p == l)
                .count();
            let grads = backward(&cache, &labels, &params, config)?;
            adam_step(&mut params, &grads, &mut state);
            loss_sum += loss * chunk.len() as f64;
        }
        stats.push(EpochStats {
            epoch,
            loss: loss_sum / n as f64,
            accuracy: correct as f64 / n as f64,
        });
        after_epoch(epoch, &params)?;
    }

    Ok((
        params,
        TrainReport {
            epochs: stats,
            wall_time_s: started.elapsed().as_secs_f64(),
            seed: seed_value,
        },
    ))
}
