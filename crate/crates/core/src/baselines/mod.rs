//! Conventional feature extractors and closed-form classifiers.

mod bands;
mod classify;
mod entropy;
mod wavelet;
mod welch;

pub use bands::{band_power, band_power_table, log_power, power_ratios, relative_power, BANDS};
pub use classify::{fit_classifier, ClassifierKind, ClassifierModel};
pub use entropy::{
    approximate_entropy, four_entropies, fuzzy_entropy, sample_entropy, shannon_entropy,
    spectral_entropy,
};
pub use wavelet::{
    ricker_kernel, scale_entropy, wavelet_entropy, wavelet_scale_energies, WAVELET_SCALES,
};
pub use welch::{welch_psd, welch_psd_series, PsdEstimate, N_BINS, SEGMENT_LEN, SEGMENT_STEP};

use ndarray::Array2;
use rayon::prelude::*;

use crate::dataset::DatasetBundle;
use crate::error::{Error, Result};

/// Ordered feature values for one sample with their schema.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// One `(channel, feature-name)` descriptor per value.
    pub schema: Vec<String>,
    pub flags: Vec<FeatureFlag>,
}

/// Marks a channel whose feature fell back to a defined degenerate value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureFlag {
    pub channel: usize,
    pub note: &'static str,
}

/// The five baseline feature extractors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extractor {
    RelativePower,
    LogPower,
    PowerRatio,
    WaveletEntropy,
    FourEntropies,
}

impl Extractor {
    pub const ALL: [Extractor; 5] = [
        Extractor::RelativePower,
        Extractor::LogPower,
        Extractor::PowerRatio,
        Extractor::WaveletEntropy,
        Extractor::FourEntropies,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Extractor::RelativePower => "relative-power",
            Extractor::LogPower => "log-power",
            Extractor::PowerRatio => "power-ratio",
            Extractor::WaveletEntropy => "wavelet-entropy",
            Extractor::FourEntropies => "four-entropies",
        }
    }

    pub fn parse(s: &str) -> Result<Extractor> {
        Extractor::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown extractor '{s}'")))
    }

    /// Features for a single sample (unnormalised for FourEntropies).
    pub fn extract_sample(&self, signal: &Array2<f32>) -> Result<FeatureVector> {
        Ok(match self {
            Extractor::RelativePower => relative_power(&welch_psd(signal)?),
            Extractor::LogPower => log_power(&welch_psd(signal)?),
            Extractor::PowerRatio => power_ratios(&welch_psd(signal)?),
            Extractor::WaveletEntropy => wavelet_entropy(signal),
            Extractor::FourEntropies => four_entropies(signal),
        })
    }
}

/// A dataset's feature rows with labels and subject ids.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub schema: Vec<String>,
    /// `n_samples x n_features`.
    pub rows: Array2<f64>,
    pub subject_ids: Vec<u16>,
    pub labels: Vec<u8>,
}

impl FeatureMatrix {
    /// Row indices for one subject.
    pub fn subject_rows(&self, subject: u16) -> Vec<usize> {
        self.subject_ids
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == subject)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn select(&self, indices: &[usize]) -> (Array2<f64>, Vec<u8>) {
        let mut rows = Array2::zeros((indices.len(), self.rows.ncols()));
        let mut labels = Vec::with_capacity(indices.len());
        for (out, &idx) in indices.iter().enumerate() {
            rows.row_mut(out).assign(&self.rows.row(idx));
            labels.push(self.labels[idx]);
        }
        (rows, labels)
    }

    /// CSV with the schema as header row.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("subject,label,");
        out.push_str(&self.schema.join(","));
        out.push('\n');
        for (i, row) in self.rows.rows().into_iter().enumerate() {
            out.push_str(&format!("{},{}", self.subject_ids[i], self.labels[i]));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Extract features for a whole bundle (parallel over samples, deterministic
/// order). FourEntropies rows are z-normalised per feature dimension within
/// each subject, using that subject's own samples.
pub fn extract_features(extractor: Extractor, bundle: &DatasetBundle) -> Result<FeatureMatrix> {
    if bundle.samples.is_empty() {
        return Err(Error::Invalid("empty bundle".into()));
    }
    let vectors: Vec<FeatureVector> = bundle
        .samples
        .par_iter()
        .map(|s| extractor.extract_sample(&s.signal))
        .collect::<Result<Vec<_>>>()?;
    let d = vectors[0].values.len();
    let mut rows = Array2::zeros((vectors.len(), d));
    for (i, v) in vectors.iter().enumerate() {
        if v.values.len() != d {
            return Err(Error::Shape("inconsistent feature lengths".into()));
        }
        for (j, &value) in v.values.iter().enumerate() {
            rows[[i, j]] = value;
        }
    }
    let mut matrix = FeatureMatrix {
        schema: vectors[0].schema.clone(),
        rows,
        subject_ids: bundle.samples.iter().map(|s| s.subject_id).collect(),
        labels: bundle.samples.iter().map(|s| s.label.as_u8()).collect(),
    };
    if extractor == Extractor::FourEntropies {
        normalize_per_subject(&mut matrix);
    }
    Ok(matrix)
}

/// In-place per-subject z-normalisation of every feature column.
fn normalize_per_subject(matrix: &mut FeatureMatrix) {
    let subjects: std::collections::BTreeSet<u16> = matrix.subject_ids.iter().copied().collect();
    let d = matrix.rows.ncols();
    for subject in subjects {
        let indices = matrix.subject_rows(subject);
        let n = indices.len() as f64;
        for f in 0..d {
            let mean = indices.iter().map(|&i| matrix.rows[[i, f]]).sum::<f64>() / n;
            let var = indices
                .iter()
                .map(|&i| {
                    let diff = matrix.rows[[i, f]] - mean;
                    diff * diff
                })
                .sum::<f64>()
                / n;
            let sd = var.sqrt().max(1e-12);
            for &i in &indices {
                matrix.rows[[i, f]] = (matrix.rows[[i, f]] - mean) / sd;
            }
        }
    }
}
