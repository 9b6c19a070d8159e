//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Subcommand;
use ndarray::Axis;

use sepcnn::baselines::{extract_features, ClassifierKind, Extractor};
use sepcnn::dataset::{
    export_container, export_metadata_csv, import_arrays, import_container, read_npy,
    synth_generate, BundleKind,
};
use sepcnn::harness::{
    evaluate_baseline, evaluate_baseline_unbalanced, evaluate_loso_balanced,
    evaluate_loso_unbalanced, evaluate_variants, EvalReport,
};
use sepcnn::interpret::{
    interpret_sample_for_class, write_heatmap_artifacts, InterpretationContext,
};
use sepcnn::model::{forward, load_checkpoint, save_checkpoint, ModelConfig};
use sepcnn::training::fit;
use sepcnn::{Error, Result};

use crate::Cli;

#[derive(Subcommand)]
pub enum DatasetCmd {
    /// Generate the deterministic synthetic fixture.
    Synth {
        #[arg(long, default_value_t = 4)]
        subjects: usize,
        #[arg(long, default_value_t = 100)]
        per_class: usize,
        /// Output file name under --out.
        #[arg(long, default_value = "synthetic.eegb")]
        name: String,
    },
    /// Map published `.npy` arrays (signals, subject ids, states) into a
    /// container.
    Import {
        /// Signals array, shape (S, 30, 384), microvolts.
        #[arg(long)]
        signals: PathBuf,
        /// Per-sample subject index array, shape (S,).
        #[arg(long)]
        subjects: PathBuf,
        /// Per-sample state array (0 = alert, 1 = drowsy), shape (S,).
        #[arg(long)]
        labels: PathBuf,
        /// Container kind: balanced | unbalanced | synthetic.
        #[arg(long)]
        kind: String,
        #[arg(long, default_value = "imported.eegb")]
        name: String,
    },
    /// Write the metadata CSV (subject,label,index) for a container.
    Export {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "metadata.csv")]
        name: String,
    },
    /// Print per-subject sample counts.
    Stats {
        #[arg(long)]
        data: PathBuf,
    },
}

#[derive(Subcommand)]
pub enum EvalCmd {
    /// Balanced-data LOSO: per-epoch test accuracy for every repeat/subject.
    Loso {
        #[arg(long)]
        data: PathBuf,
    },
    /// Train on others' balanced data, test on the held-out subject's
    /// unbalanced data.
    Unbalanced {
        #[arg(long)]
        balanced: PathBuf,
        #[arg(long)]
        unbalanced: PathBuf,
    },
    /// Conventional feature + classifier baselines.
    Baseline {
        #[arg(long)]
        data: PathBuf,
        /// relative-power | log-power | power-ratio | wavelet-entropy | four-entropies
        #[arg(long)]
        extractor: String,
        /// gnb | lda | qda | lr | knn[k]
        #[arg(long)]
        classifier: String,
        /// Optional unbalanced container: switches to the unbalanced protocol.
        #[arg(long)]
        unbalanced: Option<PathBuf>,
        /// Also dump the extracted feature matrix as CSV.
        #[arg(long)]
        features_csv: bool,
    },
    /// Balanced LOSO for all five architecture variants.
    Variants {
        #[arg(long)]
        data: PathBuf,
    },
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        crate::Command::Dataset { action } => run_dataset(cli, action),
        crate::Command::Train { data } => run_train(cli, data),
        crate::Command::Eval { protocol } => run_eval(cli, protocol),
        crate::Command::Interpret {
            data,
            checkpoint,
            sample,
        } => run_interpret(cli, data, checkpoint, sample),
    }
}

fn load_config(cli: &Cli) -> Result<ModelConfig> {
    let config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Format(format!("config {}: {e}", path.display())))?
        }
        None => ModelConfig::default(),
    };
    config.validate()?;
    Ok(config)
}

fn ensure_out(cli: &Cli) -> Result<PathBuf> {
    std::fs::create_dir_all(&cli.out)?;
    Ok(cli.out.clone())
}

fn run_dataset(cli: &Cli, action: &DatasetCmd) -> Result<()> {
    match action {
        DatasetCmd::Synth {
            subjects,
            per_class,
            name,
        } => {
            let bundle = synth_generate(*subjects, *per_class, cli.seed)?;
            let out = ensure_out(cli)?.join(name);
            export_container(&bundle, &out)?;
            println!(
                "wrote {} ({} samples, {} subjects)",
                out.display(),
                bundle.samples.len(),
                bundle.subject_ids().len()
            );
            Ok(())
        }
        DatasetCmd::Import {
            signals,
            subjects,
            labels,
            kind,
            name,
        } => {
            let bundle = import_arrays(
                &read_npy(signals)?,
                &read_npy(subjects)?,
                &read_npy(labels)?,
                BundleKind::parse(kind)?,
            )?;
            let out = ensure_out(cli)?.join(name);
            export_container(&bundle, &out)?;
            println!("wrote {} ({} samples)", out.display(), bundle.samples.len());
            Ok(())
        }
        DatasetCmd::Export { data, name } => {
            let bundle = import_container(data)?;
            let out = ensure_out(cli)?.join(name);
            export_metadata_csv(&bundle, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        DatasetCmd::Stats { data } => {
            let bundle = import_container(data)?;
            println!("kind: {}", bundle.kind.name());
            println!("samples: {}", bundle.samples.len());
            println!("subject  alert  drowsy");
            for (subject, (alert, drowsy)) in bundle.per_subject_counts() {
                println!("{subject:<8} {alert:<6} {drowsy:<6}");
            }
            Ok(())
        }
    }
}

fn run_train(cli: &Cli, data: &Path) -> Result<()> {
    let bundle = import_container(data)?;
    let config = load_config(cli)?;
    let epochs = cli.epochs.unwrap_or(11);
    let (params, report) = fit(&bundle, &config, epochs, cli.seed)?;
    let out = ensure_out(cli)?;
    let ckpt = out.join("checkpoint.bin");
    save_checkpoint(&ckpt, &config, &params, cli.seed, epochs)?;
    report.write_csv(&out.join("train_report.csv"))?;
    let last = report.epochs.last().expect("at least one epoch");
    println!(
        "trained {} epochs in {:.1}s: loss {:.4}, accuracy {:.3}",
        epochs, report.wall_time_s, last.loss, last.accuracy
    );
    println!("wrote {}", ckpt.display());
    Ok(())
}

fn write_report(report: &EvalReport, out: &Path, stem: &str) -> Result<()> {
    report.write_csv(&out.join(format!("{stem}.csv")))?;
    report.write_summary_json(&out.join(format!("{stem}_summary.json")))?;
    if let Some((epoch, acc)) = report.peak_accuracy() {
        println!(
            "{} [{}]: peak mean accuracy {:.4} at epoch {epoch} ({} folds)",
            report.protocol,
            report.variant,
            acc,
            report.folds.len()
        );
    }
    Ok(())
}

fn run_eval(cli: &Cli, protocol: &EvalCmd) -> Result<()> {
    let out = ensure_out(cli)?;
    match protocol {
        EvalCmd::Loso { data } => {
            let bundle = import_container(data)?;
            let config = load_config(cli)?;
            let report = evaluate_loso_balanced(
                &bundle,
                &config,
                cli.epochs.unwrap_or(15),
                cli.repeats.unwrap_or(1),
                cli.seed,
            )?;
            write_report(&report, &out, "report")
        }
        EvalCmd::Unbalanced {
            balanced,
            unbalanced,
        } => {
            let balanced = import_container(balanced)?;
            let unbalanced = import_container(unbalanced)?;
            let config = load_config(cli)?;
            let report = evaluate_loso_unbalanced(
                &balanced,
                &unbalanced,
                &config,
                cli.epochs.unwrap_or(11),
                cli.seed,
            )?;
            write_report(&report, &out, "report")
        }
        EvalCmd::Baseline {
            data,
            extractor,
            classifier,
            unbalanced,
            features_csv,
        } => {
            let bundle = import_container(data)?;
            let extractor = Extractor::parse(extractor)?;
            let kind = ClassifierKind::parse(classifier)?;
            if *features_csv {
                let features = extract_features(extractor, &bundle)?;
                features.write_csv(&out.join("features.csv"))?;
                println!("wrote {}", out.join("features.csv").display());
            }
            let report = match unbalanced {
                Some(u) => {
                    let unbalanced = import_container(u)?;
                    evaluate_baseline_unbalanced(&bundle, &unbalanced, extractor, kind)?
                }
                None => evaluate_baseline(&bundle, extractor, kind)?,
            };
            write_report(&report, &out, "report")
        }
        EvalCmd::Variants { data } => {
            let bundle = import_container(data)?;
            let config = load_config(cli)?;
            let reports = evaluate_variants(
                &bundle,
                &config,
                cli.epochs.unwrap_or(15),
                cli.repeats.unwrap_or(1),
                cli.seed,
            )?;
            for report in &reports {
                write_report(report, &out, &format!("report_{}", report.variant))?;
            }
            Ok(())
        }
    }
}

fn parse_sample_spec(spec: &str, len: usize) -> Result<Vec<usize>> {
    let parse_one = |s: &str| -> Result<usize> {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::Invalid(format!("bad sample index '{s}'")))
    };
    let indices: Vec<usize> = match spec.split_once('-') {
        Some((a, b)) => {
            let (start, end) = (parse_one(a)?, parse_one(b)?);
            if start > end {
                return Err(Error::Invalid(format!("empty sample range '{spec}'")));
            }
            (start..=end).collect()
        }
        None => vec![parse_one(spec)?],
    };
    for &i in &indices {
        if i >= len {
            return Err(Error::Invalid(format!(
                "sample {i} out of range (container holds {len})"
            )));
        }
    }
    Ok(indices)
}

fn run_interpret(cli: &Cli, data: &Path, checkpoint: &Path, sample: &str) -> Result<()> {
    let bundle = import_container(data)?;
    let ckpt = load_checkpoint(checkpoint)?;
    let config = ckpt.config;
    let indices = parse_sample_spec(sample, bundle.samples.len())?;
    let out = ensure_out(cli)?;

    // Predictions use the same batch semantics as the evaluation protocols:
    // one forward over all samples of the subject under analysis.
    let mut by_subject: BTreeMap<u16, Vec<usize>> = BTreeMap::new();
    for &idx in &indices {
        by_subject
            .entry(bundle.samples[idx].subject_id)
            .or_default()
            .push(idx);
    }
    for (subject, wanted) in by_subject {
        let subject_indices = bundle.subject_indices(subject);
        let (x, _) = bundle.batch(&subject_indices);
        let cache = forward(&x, &ckpt.params, &config)?;
        let preds = cache.predictions();
        for idx in wanted {
            let row = subject_indices
                .iter()
                .position(|&i| i == idx)
                .expect("sample belongs to its subject");
            let sample_x = x.index_axis(Axis(0), row).to_owned();
            let mut interp =
                interpret_sample_for_class(&sample_x, &ckpt.params, &config, preds[row])?;
            interp.likelihoods = [cache.probs[[row, 0]], cache.probs[[row, 1]]];
            let ctx = InterpretationContext {
                subject_id: subject,
                true_label: bundle.samples[idx].label.as_u8(),
                sample_index: idx,
                channel_names: bundle.channel_names.clone(),
            };
            let paths =
                write_heatmap_artifacts(&out, &format!("heatmap_{idx}"), &interp, &sample_x, &ctx)?;
            println!(
                "sample {idx}: predicted {} (alert {:.3}, drowsy {:.3}) -> {}",
                if interp.predicted == 1 {
                    "drowsy"
                } else {
                    "alert"
                },
                interp.likelihoods[0],
                interp.likelihoods[1],
                paths[1].display()
            );
        }
    }
    Ok(())
}
