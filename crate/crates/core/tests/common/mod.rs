//! Shared helpers for the integration suites: an implementation-independent
//! finite-difference gradient oracle and fixture builders.

#![allow(dead_code)]

use ndarray::Array3;
use rand::Rng;
use sepcnn::model::{forward, init_params, ModelConfig, ModelParams};
use sepcnn::training::{backward, cross_entropy_loss};

pub const FIELD_NAMES: [&str; 8] = [
    "pointwise_w",
    "pointwise_b",
    "temporal_w",
    "temporal_b",
    "bn_gamma",
    "bn_beta",
    "dense_w",
    "dense_b",
];

pub fn field(p: &ModelParams, idx: usize) -> &[f64] {
    match idx {
        0 => p.pointwise_w.as_slice().unwrap(),
        1 => p.pointwise_b.as_slice().unwrap(),
        2 => p.temporal_w.as_slice().unwrap(),
        3 => p.temporal_b.as_slice().unwrap(),
        4 => p.bn_gamma.as_slice().unwrap(),
        5 => p.bn_beta.as_slice().unwrap(),
        6 => p.dense_w.as_slice().unwrap(),
        7 => p.dense_b.as_slice().unwrap(),
        _ => unreachable!(),
    }
}

pub fn field_mut(p: &mut ModelParams, idx: usize) -> &mut [f64] {
    match idx {
        0 => p.pointwise_w.as_slice_mut().unwrap(),
        1 => p.pointwise_b.as_slice_mut().unwrap(),
        2 => p.temporal_w.as_slice_mut().unwrap(),
        3 => p.temporal_b.as_slice_mut().unwrap(),
        4 => p.bn_gamma.as_slice_mut().unwrap(),
        5 => p.bn_beta.as_slice_mut().unwrap(),
        6 => p.dense_w.as_slice_mut().unwrap(),
        7 => p.dense_b.as_slice_mut().unwrap(),
        _ => unreachable!(),
    }
}

pub fn random_batch(config: &ModelConfig, batch: usize, seed: u64) -> (Array3<f64>, Vec<u8>) {
    let mut rng = sepcnn::seed::rng(seed, &[0xBA7C4]);
    let mut x = Array3::zeros((batch, config.in_channels, config.in_len));
    for v in x.iter_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    let labels = (0..batch).map(|s| (s % 2) as u8).collect();
    (x, labels)
}

/// Worst relative error between the analytic gradient and central finite
/// differences, checked over every element of every parameter tensor.
pub fn gradient_check(config: &ModelConfig, batch: usize, seed: u64, step: f64) -> f64 {
    let mut params = init_params(config, seed);
    let (x, labels) = random_batch(config, batch, seed ^ 0x5EED);

    let loss_of = |p: &ModelParams| -> f64 {
        let cache = forward(&x, p, config).unwrap();
        cross_entropy_loss(&cache.logits, &labels).unwrap()
    };

    let cache = forward(&x, &params, config).unwrap();
    let analytic = backward(&cache, &labels, &params, config).unwrap();

    let mut worst = 0.0f64;
    for idx in 0..8 {
        for e in 0..field(&analytic, idx).len() {
            let original = field(&params, idx)[e];
            field_mut(&mut params, idx)[e] = original + step;
            let plus = loss_of(&params);
            field_mut(&mut params, idx)[e] = original - step;
            let minus = loss_of(&params);
            field_mut(&mut params, idx)[e] = original;

            let fd = (plus - minus) / (2.0 * step);
            let a = field(&analytic, idx)[e];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-8);
            if rel > worst {
                worst = rel;
            }
            assert!(
                rel < 1e-4,
                "{}[{e}]: analytic {a:.9e} vs fd {fd:.9e} (rel {rel:.3e})",
                FIELD_NAMES[idx]
            );
        }
    }
    worst
}
