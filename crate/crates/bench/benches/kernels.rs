//! Hot-path benchmarks: forward, backward, Welch PSD, entropies, and the
//! interpretation pipeline at default geometry.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ndarray::Axis;
use std::hint::black_box;

use sepcnn::baselines::{four_entropies, wavelet_entropy, welch_psd};
use sepcnn::interpret::interpret_sample_for_class;
use sepcnn::model::{forward, init_params};
use sepcnn::training::{adam_step, backward, AdamState};
use sepcnn_bench::{bench_batch, bench_bundle, default_config};

fn bench_forward_backward(c: &mut Criterion) {
    let bundle = bench_bundle();
    let config = default_config();
    let params = init_params(&config, 1);
    let (x, labels) = bench_batch(&bundle, 50);

    c.bench_function("forward_batch50", |b| {
        b.iter(|| forward(black_box(&x), &params, &config).unwrap())
    });

    let cache = forward(&x, &params, &config).unwrap();
    c.bench_function("backward_batch50", |b| {
        b.iter(|| backward(black_box(&cache), &labels, &params, &config).unwrap())
    });

    let grads = backward(&cache, &labels, &params, &config).unwrap();
    c.bench_function("adam_step", |b| {
        b.iter_batched(
            || (params.clone(), AdamState::new(&config)),
            |(mut p, mut s)| adam_step(&mut p, &grads, &mut s),
            BatchSize::SmallInput,
        )
    });
}

fn bench_features(c: &mut Criterion) {
    let bundle = bench_bundle();
    let signal = &bundle.samples[0].signal;

    c.bench_function("welch_psd_sample", |b| {
        b.iter(|| welch_psd(black_box(signal)).unwrap())
    });
    c.bench_function("wavelet_entropy_sample", |b| {
        b.iter(|| wavelet_entropy(black_box(signal)))
    });
    c.bench_function("four_entropies_sample", |b| {
        b.iter(|| four_entropies(black_box(signal)))
    });
}

fn bench_interpret(c: &mut Criterion) {
    let bundle = bench_bundle();
    let config = default_config();
    let params = init_params(&config, 2);
    let (x, _) = bench_batch(&bundle, 1);
    let sample = x.index_axis(Axis(0), 0).to_owned();

    c.bench_function("interpret_sample", |b| {
        b.iter(|| interpret_sample_for_class(black_box(&sample), &params, &config, 1).unwrap())
    });
}

criterion_group!(
    benches,
    bench_forward_backward,
    bench_features,
    bench_interpret
);
criterion_main!(benches);
