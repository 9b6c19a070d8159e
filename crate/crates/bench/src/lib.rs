//! Shared input builders for the benchmarks.

use ndarray::Array3;
use sepcnn::dataset::{synth_generate, DatasetBundle};
use sepcnn::model::ModelConfig;

pub fn bench_bundle() -> DatasetBundle {
    synth_generate(2, 30, 7).expect("fixture")
}

/// One training batch at default geometry.
pub fn bench_batch(bundle: &DatasetBundle, batch: usize) -> (Array3<f64>, Vec<u8>) {
    let indices: Vec<usize> = (0..batch).collect();
    bundle.batch(&indices)
}

pub fn default_config() -> ModelConfig {
    ModelConfig::default()
}
