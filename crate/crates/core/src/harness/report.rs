//! Fold results, per-epoch aggregates, and report serialisation.

use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::Metrics;

/// One evaluated (subject, repeat, epoch) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub subject_id: u16,
    pub repeat_index: usize,
    pub epoch: usize,
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl FoldResult {
    pub fn new(subject_id: u16, repeat_index: usize, epoch: usize, m: Metrics) -> Self {
        Self {
            subject_id,
            repeat_index,
            epoch,
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            tp: m.tp,
            fp: m.fp,
            tn: m.tn,
            fn_: m.fn_,
        }
    }
}

/// Mean and standard error of fold accuracies at one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochAggregate {
    pub epoch: usize,
    pub n_folds: usize,
    pub mean_accuracy: f64,
    /// Sample standard deviation over folds divided by `sqrt(n_folds)`.
    pub stderr_accuracy: f64,
    pub mean_precision: Option<f64>,
    pub mean_recall: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub protocol: String,
    pub variant: String,
    pub folds: Vec<FoldResult>,
    pub aggregates: Vec<EpochAggregate>,
}

impl EvalReport {
    pub fn new(protocol: &str, variant: &str, folds: Vec<FoldResult>) -> Self {
        let aggregates = Self::compute_aggregates(&folds);
        Self {
            protocol: protocol.to_string(),
            variant: variant.to_string(),
            folds,
            aggregates,
        }
    }

    /// Recompute the per-epoch aggregates from the folds.
    pub fn compute_aggregates(folds: &[FoldResult]) -> Vec<EpochAggregate> {
        let mut epochs: Vec<usize> = folds.iter().map(|f| f.epoch).collect();
        epochs.sort_unstable();
        epochs.dedup();
        epochs
            .into_iter()
            .map(|epoch| {
                let accs: Vec<f64> = folds
                    .iter()
                    .filter(|f| f.epoch == epoch)
                    .map(|f| f.accuracy)
                    .collect();
                let n = accs.len();
                let mean = accs.iter().sum::<f64>() / n as f64;
                let stderr = if n > 1 {
                    let var =
                        accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64;
                    (var / n as f64).sqrt()
                } else {
                    0.0
                };
                let mean_of = |pick: fn(&FoldResult) -> Option<f64>| -> Option<f64> {
                    let values: Vec<f64> = folds
                        .iter()
                        .filter(|f| f.epoch == epoch)
                        .filter_map(pick)
                        .collect();
                    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
                };
                EpochAggregate {
                    epoch,
                    n_folds: n,
                    mean_accuracy: mean,
                    stderr_accuracy: stderr,
                    mean_precision: mean_of(|f| f.precision),
                    mean_recall: mean_of(|f| f.recall),
                }
            })
            .collect()
    }

    /// Best per-epoch mean accuracy, with its epoch.
    pub fn peak_accuracy(&self) -> Option<(usize, f64)> {
        self.aggregates
            .iter()
            .map(|a| (a.epoch, a.mean_accuracy))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
    }

    /// Mean accuracy across all folds of the final epoch.
    pub fn final_epoch_mean_accuracy(&self) -> Option<f64> {
        self.aggregates.last().map(|a| a.mean_accuracy)
    }

    /// CSV rows: `protocol,variant,subject,repeat,epoch,acc,precision,recall,tp,fp,tn,fn`.
    pub fn csv_string(&self) -> String {
        let mut out = String::from(
            "protocol,variant,subject,repeat,epoch,acc,precision,recall,tp,fp,tn,fn\n",
        );
        let opt = |v: Option<f64>| match v {
            Some(x) => format!("{x}"),
            None => "NaN".to_string(),
        };
        for f in &self.folds {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                self.protocol,
                self.variant,
                f.subject_id,
                f.repeat_index,
                f.epoch,
                f.accuracy,
                opt(f.precision),
                opt(f.recall),
                f.tp,
                f.fp,
                f.tn,
                f.fn_
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.csv_string())?;
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String> {
        let epochs: Vec<serde_json::Value> = self
            .aggregates
            .iter()
            .map(|a| {
                serde_json::json!({
                    "epoch": a.epoch,
                    "n_folds": a.n_folds,
                    "mean_acc": a.mean_accuracy,
                    "stderr_acc": a.stderr_accuracy,
                    "mean_precision": a.mean_precision,
                    "mean_recall": a.mean_recall,
                })
            })
            .collect();
        let value = serde_json::json!({
            "protocol": self.protocol,
            "variant": self.variant,
            "n_folds": self.folds.len(),
            "epochs": epochs,
        });
        serde_json::to_string_pretty(&value).map_err(|e| Error::Format(format!("summary: {e}")))
    }

    pub fn write_summary_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.summary_json()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fold(subject: u16, repeat: usize, epoch: usize, acc: f64) -> FoldResult {
        FoldResult {
            subject_id: subject,
            repeat_index: repeat,
            epoch,
            accuracy: acc,
            precision: Some(acc),
            recall: None,
            tp: 1,
            fp: 0,
            tn: 1,
            fn_: 0,
        }
    }

    #[test]
    fn aggregates_match_recomputation_exactly() {
        let folds = vec![
            fold(1, 0, 1, 0.5),
            fold(2, 0, 1, 0.7),
            fold(1, 0, 2, 0.8),
            fold(2, 0, 2, 0.6),
        ];
        let report = EvalReport::new("test", "full", folds);
        assert_eq!(report.aggregates.len(), 2);
        let recomputed = EvalReport::compute_aggregates(&report.folds);
        for (a, b) in report.aggregates.iter().zip(&recomputed) {
            assert!((a.mean_accuracy - b.mean_accuracy).abs() < 1e-12);
            assert!((a.stderr_accuracy - b.stderr_accuracy).abs() < 1e-12);
        }
        let a1 = &report.aggregates[0];
        assert!((a1.mean_accuracy - 0.6).abs() < 1e-12);
        // Sample std of {0.5, 0.7} = sqrt(0.02); stderr = sqrt(0.02/2).
        assert!((a1.stderr_accuracy - (0.02f64 / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn csv_has_one_row_per_fold_and_nan_for_undefined() {
        let report = EvalReport::new("test", "full", vec![fold(3, 1, 4, 0.9)]);
        let csv = report.csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            "protocol,variant,subject,repeat,epoch,acc,precision,recall,tp,fp,tn,fn"
        );
        assert!(lines[1].starts_with("test,full,3,1,4,0.9,0.9,NaN,"));
    }

    #[test]
    fn peak_accuracy_prefers_earlier_epoch_on_ties() {
        let folds = vec![fold(1, 0, 3, 0.8), fold(1, 0, 7, 0.8), fold(1, 0, 5, 0.2)];
        let report = EvalReport::new("t", "full", folds);
        assert_eq!(report.peak_accuracy(), Some((3, 0.8)));
    }
}
