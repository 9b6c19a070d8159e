//! Leave-one-subject-out evaluation protocols and reporting.
//!
//! Every protocol derives one seed per (repeat, subject) fold, so fold results
//! are independent of scheduling; folds may run in parallel and still produce
//! byte-identical reports for any thread count. Drowsy is the positive class
//! for precision and recall. The held-out subject's samples are scored in a
//! single forward batch, so batch-norm statistics at test time come from the
//! test batch itself.

mod report;

pub use report::{EpochAggregate, EvalReport, FoldResult};

use rayon::prelude::*;

use crate::baselines::{extract_features, fit_classifier, ClassifierKind, Extractor};
use crate::dataset::{loso_split, DatasetBundle};
use crate::error::{Error, Result};
use crate::model::{forward, ModelConfig};
use crate::seed;
use crate::training::fit_with;

const TAG_FOLD: u64 = 0xF0_1D;

/// Confusion counts and derived metrics (drowsy = positive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    /// `tp/(tp+fp)`; `None` when nothing was predicted drowsy.
    pub precision: Option<f64>,
    /// `tp/(tp+fn)`; `None` when the test set has no drowsy samples.
    pub recall: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

pub fn metrics(predictions: &[u8], labels: &[u8]) -> Result<Metrics> {
    if predictions.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Invalid("empty prediction set".into()));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 0) => tn += 1,
            (0, 1) => fn_ += 1,
            _ => return Err(Error::Invalid("labels must be 0 or 1".into())),
        }
    }
    let total = predictions.len() as f64;
    Ok(Metrics {
        accuracy: (tp + tn) as f64 / total,
        precision: (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64),
        recall: (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64),
        tp,
        fp,
        tn,
        fn_,
    })
}

fn cnn_fold(
    bundle: &DatasetBundle,
    config: &ModelConfig,
    subject: u16,
    repeat: usize,
    epochs: usize,
    seed_value: u64,
) -> Result<Vec<FoldResult>> {
    let (train, test) = loso_split(bundle, subject)?;
    // Subject-id audit: the held-out subject must never leak into training.
    if train.samples.iter().any(|s| s.subject_id == subject) {
        return Err(Error::Invalid(format!(
            "subject {subject} leaked into its own training fold"
        )));
    }
    let test_indices: Vec<usize> = (0..test.samples.len()).collect();
    let (test_x, test_labels) = test.batch(&test_indices);
    let fold_seed = seed::derive(seed_value, &[TAG_FOLD, repeat as u64, subject as u64]);

    let mut results = Vec::with_capacity(epochs);
    fit_with(&train, config, epochs, fold_seed, |epoch, params| {
        let cache = forward(&test_x, params, config)?;
        let m = metrics(&cache.predictions(), &test_labels)?;
        results.push(FoldResult::new(subject, repeat, epoch, m));
        Ok(())
    })?;
    Ok(results)
}

/// The balanced-data protocol: for every repeat and held-out subject, train
/// on the remaining subjects and record test metrics after each epoch
/// `1..=epochs`.
pub fn evaluate_loso_balanced(
    bundle: &DatasetBundle,
    config: &ModelConfig,
    epochs: usize,
    repeats: usize,
    seed_value: u64,
) -> Result<EvalReport> {
    if !bundle.is_balanced_per_subject() {
        return Err(Error::Invalid(
            "balanced protocol needs a per-subject balanced bundle".into(),
        ));
    }
    if repeats == 0 {
        return Err(Error::Invalid("repeats must be at least 1".into()));
    }
    let subjects = bundle.subject_ids();
    if subjects.len() < 2 {
        return Err(Error::Invalid("need at least 2 subjects".into()));
    }
    let jobs: Vec<(usize, u16)> = (0..repeats)
        .flat_map(|r| subjects.iter().map(move |&s| (r, s)))
        .collect();
    let per_fold: Vec<Vec<FoldResult>> = jobs
        .par_iter()
        .map(|&(repeat, subject)| cnn_fold(bundle, config, subject, repeat, epochs, seed_value))
        .collect::<Result<Vec<_>>>()?;
    let folds: Vec<FoldResult> = per_fold.into_iter().flatten().collect();
    Ok(EvalReport::new(
        "loso_balanced",
        config.variant.name(),
        folds,
    ))
}

/// The unbalanced-data protocol: train on the balanced data of the other
/// subjects, test on the held-out subject's unbalanced data after a fixed
/// number of epochs.
pub fn evaluate_loso_unbalanced(
    balanced: &DatasetBundle,
    unbalanced: &DatasetBundle,
    config: &ModelConfig,
    epochs: usize,
    seed_value: u64,
) -> Result<EvalReport> {
    let subjects = check_shared_subjects(balanced, unbalanced)?;
    let per_fold: Vec<FoldResult> = subjects
        .par_iter()
        .map(|&subject| {
            let (train, _) = loso_split(balanced, subject)?;
            if train.samples.iter().any(|s| s.subject_id == subject) {
                return Err(Error::Invalid(format!(
                    "subject {subject} leaked into its own training fold"
                )));
            }
            let test_indices = unbalanced.subject_indices(subject);
            let (test_x, test_labels) = unbalanced.batch(&test_indices);
            let fold_seed = seed::derive(seed_value, &[TAG_FOLD, 0, subject as u64]);
            let (params, _) = crate::training::fit(&train, config, epochs, fold_seed)?;
            let cache = forward(&test_x, &params, config)?;
            let m = metrics(&cache.predictions(), &test_labels)?;
            Ok(FoldResult::new(subject, 0, epochs, m))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::new(
        "loso_unbalanced",
        config.variant.name(),
        per_fold,
    ))
}

/// Deterministic baseline LOSO on a single bundle (no repeats; features are
/// extracted once and split per fold).
pub fn evaluate_baseline(
    bundle: &DatasetBundle,
    extractor: Extractor,
    kind: ClassifierKind,
) -> Result<EvalReport> {
    let features = extract_features(extractor, bundle)?;
    let subjects = bundle.subject_ids();
    if subjects.len() < 2 {
        return Err(Error::Invalid("need at least 2 subjects".into()));
    }
    let folds: Vec<FoldResult> = subjects
        .par_iter()
        .map(|&subject| {
            let test_rows = features.subject_rows(subject);
            let train_rows: Vec<usize> = (0..features.rows.nrows())
                .filter(|i| !test_rows.contains(i))
                .collect();
            let (train_x, train_y) = features.select(&train_rows);
            let (test_x, test_y) = features.select(&test_rows);
            let model = fit_classifier(kind, &train_x, &train_y)?;
            let pred = model.predict(&test_x)?;
            let m = metrics(&pred, &test_y)?;
            Ok(FoldResult::new(subject, 0, 0, m))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::new(
        "baseline_loso",
        &format!("{}+{}", extractor.name(), kind.name()),
        folds,
    ))
}

/// Baseline path of the unbalanced protocol: fit on the balanced features of
/// the other subjects, test on the held-out subject's unbalanced features.
pub fn evaluate_baseline_unbalanced(
    balanced: &DatasetBundle,
    unbalanced: &DatasetBundle,
    extractor: Extractor,
    kind: ClassifierKind,
) -> Result<EvalReport> {
    let subjects = check_shared_subjects(balanced, unbalanced)?;
    let train_features = extract_features(extractor, balanced)?;
    let test_features = extract_features(extractor, unbalanced)?;
    let folds: Vec<FoldResult> = subjects
        .par_iter()
        .map(|&subject| {
            let test_rows = test_features.subject_rows(subject);
            let train_rows: Vec<usize> = (0..train_features.rows.nrows())
                .filter(|&i| train_features.subject_ids[i] != subject)
                .collect();
            let (train_x, train_y) = train_features.select(&train_rows);
            let (test_x, test_y) = test_features.select(&test_rows);
            let model = fit_classifier(kind, &train_x, &train_y)?;
            let pred = model.predict(&test_x)?;
            let m = metrics(&pred, &test_y)?;
            Ok(FoldResult::new(subject, 0, 0, m))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::new(
        "baseline_unbalanced",
        &format!("{}+{}", extractor.name(), kind.name()),
        folds,
    ))
}

/// Run the balanced protocol for every architecture variant.
pub fn evaluate_variants(
    bundle: &DatasetBundle,
    base_config: &ModelConfig,
    epochs: usize,
    repeats: usize,
    seed_value: u64,
) -> Result<Vec<EvalReport>> {
    crate::model::Variant::ALL
        .into_iter()
        .map(|variant| {
            let config = ModelConfig {
                variant,
                ..*base_config
            };
            evaluate_loso_balanced(bundle, &config, epochs, repeats, seed_value)
        })
        .collect()
}

fn check_shared_subjects(balanced: &DatasetBundle, unbalanced: &DatasetBundle) -> Result<Vec<u16>> {
    let a = balanced.subject_ids();
    let b = unbalanced.subject_ids();
    if a != b {
        return Err(Error::Invalid(format!(
            "subject sets differ: balanced {a:?} vs unbalanced {b:?}"
        )));
    }
    if a.len() < 2 {
        return Err(Error::Invalid("need at least 2 subjects".into()));
    }
    Ok(a)
}
