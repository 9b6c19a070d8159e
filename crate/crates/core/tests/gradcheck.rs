//! Finite-difference verification of the analytic gradients, per variant.

mod common;

use sepcnn::model::{ModelConfig, Variant};

#[test]
fn full_variant_gradients_match_finite_differences() {
    let worst = common::gradient_check(&ModelConfig::tiny(Variant::Full), 4, 7, 1e-5);
    assert!(worst < 1e-4, "worst relative error {worst:.3e}");
}

#[test]
fn conv1d_gradients_match_finite_differences() {
    common::gradient_check(&ModelConfig::tiny(Variant::Conv1d), 4, 11, 1e-5);
}

#[test]
fn no_depthwise_gradients_match_finite_differences() {
    common::gradient_check(&ModelConfig::tiny(Variant::NoDepthwise), 4, 13, 1e-5);
}

#[test]
fn no_pointwise_gradients_match_finite_differences() {
    common::gradient_check(&ModelConfig::tiny(Variant::NoPointwise), 4, 17, 1e-5);
}

#[test]
fn no_batchnorm_gradients_match_finite_differences() {
    common::gradient_check(&ModelConfig::tiny(Variant::NoBatchNorm), 4, 19, 1e-5);
}

#[test]
fn saturated_softmax_has_vanishing_gradient() {
    // A perfectly separated batch with saturated predictions sits at a
    // zero-gradient fixed point of the cross-entropy.
    use ndarray::Array3;
    use sepcnn::model::{forward, init_params};
    use sepcnn::training::backward;

    let config = ModelConfig::tiny(Variant::Full);
    let mut params = init_params(&config, 3);
    // Saturate the logits through a huge dense bias aligned with the labels.
    params.dense_w.fill(0.0);
    params.dense_b[0] = 40.0;
    params.dense_b[1] = -40.0;
    let x = Array3::zeros((4, config.in_channels, config.in_len));
    let labels = vec![0u8; 4];
    let cache = forward(&x, &params, &config).unwrap();
    let grads = backward(&cache, &labels, &params, &config).unwrap();
    let mut norm = 0.0f64;
    for idx in 0..8 {
        for &g in common::field(&grads, idx) {
            norm += g * g;
        }
    }
    assert!(norm.sqrt() < 1e-6, "gradient norm {:.3e}", norm.sqrt());
}

#[test]
fn duplicated_batch_keeps_mean_gradient() {
    // Mean reduction: duplicating every sample leaves gradients unchanged.
    use sepcnn::model::forward;
    use sepcnn::training::backward;

    let config = ModelConfig::tiny(Variant::Full);
    let params = sepcnn::model::init_params(&config, 23);
    let (x, labels) = common::random_batch(&config, 3, 29);

    let mut doubled = ndarray::Array3::zeros((6, config.in_channels, config.in_len));
    for s in 0..3 {
        doubled
            .index_axis_mut(ndarray::Axis(0), s)
            .assign(&x.index_axis(ndarray::Axis(0), s));
        doubled
            .index_axis_mut(ndarray::Axis(0), s + 3)
            .assign(&x.index_axis(ndarray::Axis(0), s));
    }
    let mut labels2 = labels.clone();
    labels2.extend_from_slice(&labels);

    let g1 = backward(
        &forward(&x, &params, &config).unwrap(),
        &labels,
        &params,
        &config,
    )
    .unwrap();
    let g2 = backward(
        &forward(&doubled, &params, &config).unwrap(),
        &labels2,
        &params,
        &config,
    )
    .unwrap();
    for idx in 0..8 {
        for (a, b) in common::field(&g1, idx).iter().zip(common::field(&g2, idx)) {
            assert!(
                (a - b).abs() < 1e-12,
                "{}: {a} vs {b}",
                common::FIELD_NAMES[idx]
            );
        }
    }
}
