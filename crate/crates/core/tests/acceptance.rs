//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL/SKIP line (visible with `--nocapture`).
//!
//! Criterion 9 needs the real recordings; point `SEPCNN_DATA_DIR` at a
//! directory holding `balanced.eegb` and `unbalanced.eegb` to enable it.

mod common;

use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::Rng;

use sepcnn::baselines::{
    approximate_entropy, relative_power, sample_entropy, scale_entropy, welch_psd, ClassifierKind,
    Extractor,
};
use sepcnn::dataset::{loso_split, synth_generate_traced, RATE_HZ, WINDOW_LEN};
use sepcnn::harness::{
    evaluate_baseline, evaluate_loso_balanced, evaluate_loso_unbalanced, metrics, EvalReport,
    FoldResult,
};
use sepcnn::interpret::{
    build_heatmap, class_activation_map, interpret_sample_for_class, trace_location, DEFAULT_SIGMA,
};
use sepcnn::model::{forward, init_params, load_checkpoint, save_checkpoint, ModelConfig, Variant};
use sepcnn::training::{fit, fit_with};

fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    sepcnn::seed::rng(seed, &[0xACCE_97])
}

#[test]
fn criterion_1_gradient_correctness() {
    let started = Instant::now();
    let config = ModelConfig::tiny(Variant::Full);
    let worst = common::gradient_check(&config, 4, 2024, 1e-5);
    let elapsed = started.elapsed().as_secs_f64();
    assert!(worst < 1e-4, "worst relative error {worst:.3e}");
    assert!(elapsed < 10.0, "gradient check took {elapsed:.1}s");
    println!(
        "PASS criterion 1: gradients match finite differences (worst rel {worst:.2e}, {elapsed:.2}s < 10s)"
    );
}

#[test]
fn criterion_2_architecture_shape_contract() {
    let config = ModelConfig::default();
    let params = init_params(&config, 5);
    let (x, _) = common::random_batch(&config, 3, 50);
    let cache = forward(&x, &params, &config).unwrap();
    assert_eq!(cache.input.dim(), (3, 30, 384));
    assert_eq!(cache.pointwise_out.dim(), (3, 16, 384));
    assert_eq!(cache.temporal_out.dim(), (3, 32, 321));
    assert_eq!(cache.bn_out.dim(), (3, 32, 321));
    assert_eq!(cache.pooled.dim(), (3, 32));
    assert_eq!(cache.probs.dim(), (3, 2));
    for row in cache.probs.rows() {
        assert!((row[0] + row[1] - 1.0).abs() <= 1e-6);
    }
    println!(
        "PASS criterion 2: shape chain (30,384)->(16,384)->(32,321)->(32,321)->(32)->(2), softmax rows sum to 1 +- 1e-6"
    );
}

#[test]
fn criterion_3_cam_identity() {
    let config = ModelConfig::default();
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let params = init_params(&config, 300 + trial);
        let mut x = Array2::zeros((30, 384));
        for v in x.iter_mut() {
            *v = r.random_range(-10.0..10.0);
        }
        let batch = x.insert_axis(Axis(0));
        let cache = forward(&batch, &params, &config).unwrap();
        for class in [0u8, 1] {
            let map = class_activation_map(&cache, &params, class).unwrap();
            let total: f64 = map.values.iter().sum();
            let expected = config.conv_out_len() as f64
                * (cache.logits[[0, class as usize]] - params.dense_b[class as usize]);
            let rel = (total - expected).abs() / expected.abs().max(1e-8);
            assert!(rel < 1e-4, "trial {trial} class {class}: rel {rel:.2e}");
            worst = worst.max(rel);
        }
    }
    println!(
        "PASS criterion 3: sum(M_c) = (n-l+1)*(logit_c - bias_c) on 100 random samples/models (worst rel {worst:.2e})"
    );
}

#[test]
fn criterion_4_tracing_oracle_equivalence() {
    let config = ModelConfig::tiny(Variant::Full);
    let mut r = rng(4);
    for trial in 0..1000u64 {
        let params = init_params(&config, 4000 + trial);
        let mut x = Array2::zeros((config.in_channels, config.in_len));
        for v in x.iter_mut() {
            *v = r.random_range(-1.0..1.0);
        }
        let node = r.random_range(0..2 * config.pointwise_filters);
        let time = r.random_range(0..config.conv_out_len());
        let (p, _) = trace_location(node, time, &x, &params, &config).unwrap();
        // Exhaustive argmax oracle over all channels.
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for ch in 0..config.in_channels {
            let mut corr = 0.0;
            for t in 0..config.kernel_len {
                corr += params.temporal_w[[node, t]] * x[[ch, time + t]];
            }
            let score = params.pointwise_w[[node / 2, ch]] * corr;
            if score > best_score {
                best_score = score;
                best = ch;
            }
        }
        assert_eq!(p, best, "trial {trial}");
    }
    println!("PASS criterion 4: trace_location equals the exhaustive argmax oracle on 1000 random locations");
}

#[test]
fn criterion_5_heatmap_contract() {
    let mut r = rng(5);
    let amplitude = 1.0 / (DEFAULT_SIGMA * (2.0 * std::f64::consts::PI).sqrt());
    for trial in 0..20 {
        let locations: Vec<(usize, f64)> = (0..100)
            .map(|_| (r.random_range(0..30usize), r.random_range(31.5..351.5)))
            .collect();
        let heatmap = build_heatmap(&locations, DEFAULT_SIGMA, 1).unwrap();
        assert!(heatmap.map.iter().all(|&v| (-1.0..=1.0).contains(&v)));
        let max = heatmap
            .map
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(max, 1.0, "trial {trial}: max {max}");
        for p in 0..30 {
            for q in 0..WINDOW_LEN {
                let mut expected = 0.0;
                for &(pk, qk) in &locations {
                    if pk == p {
                        let d = q as f64 - qk;
                        expected +=
                            amplitude * (-d * d / (2.0 * DEFAULT_SIGMA * DEFAULT_SIGMA)).exp();
                    }
                }
                assert!(
                    (heatmap.raw[[p, q]] - expected).abs() < 1e-10,
                    "trial {trial} raw[{p}][{q}]"
                );
            }
        }
    }
    println!("PASS criterion 5: heatmaps lie in [-1,1] with max +1 and raw values match the Gaussian-sum oracle to 1e-10");
}

#[test]
fn criterion_6_end_to_end_fixture() {
    let started = Instant::now();
    let traced = synth_generate_traced(4, 100, 42).unwrap();
    let bundle = &traced.bundle;
    let config = ModelConfig::default();
    let epochs = 20;

    let mut folds: Vec<FoldResult> = Vec::new();
    let mut top3_hits = 0usize;
    let mut top3_total = 0usize;

    for subject in bundle.subject_ids() {
        let (train, _) = loso_split(bundle, subject).unwrap();
        let test_idx = bundle.subject_indices(subject);
        let (test_x, test_labels) = bundle.batch(&test_idx);
        let fold_seed = sepcnn::seed::derive(42, &[subject as u64]);

        let mut per_epoch = Vec::new();
        let (params, _) = fit_with(&train, &config, epochs, fold_seed, |epoch, params| {
            let cache = forward(&test_x, params, &config)?;
            let m = metrics(&cache.predictions(), &test_labels)?;
            per_epoch.push(FoldResult::new(subject, 0, epoch, m));
            Ok(())
        })
        .unwrap();
        folds.extend(per_epoch);

        // Interpret every drowsy test sample the trained model classifies
        // correctly; the spindle-bearing channel must rank in the top 3.
        let cache = forward(&test_x, &params, &config).unwrap();
        let preds = cache.predictions();
        for (row, &global_idx) in test_idx.iter().enumerate() {
            if test_labels[row] != 1 || preds[row] != 1 {
                continue;
            }
            let spindle = traced.spindle_channels[global_idx].unwrap();
            let sample_x = test_x.index_axis(Axis(0), row).to_owned();
            let interp = interpret_sample_for_class(&sample_x, &params, &config, 1).unwrap();
            let mut order: Vec<usize> = (0..30).collect();
            order.sort_by(|&a, &b| {
                interp.heatmap.channel_summary[b]
                    .partial_cmp(&interp.heatmap.channel_summary[a])
                    .unwrap()
            });
            top3_total += 1;
            if order[..3].contains(&spindle) {
                top3_hits += 1;
            }
        }
    }

    let report = EvalReport::new("loso_balanced", "full", folds);
    let (peak_epoch, peak_acc) = report.peak_accuracy().unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        peak_acc >= 0.95,
        "LOSO peak mean accuracy {peak_acc:.3} at epoch {peak_epoch}"
    );
    assert!(elapsed < 300.0, "fixture run took {elapsed:.0}s");
    let rate = top3_hits as f64 / top3_total.max(1) as f64;
    assert!(
        rate >= 0.8,
        "spindle channel in top-3 on {top3_hits}/{top3_total} correctly classified drowsy samples"
    );
    println!(
        "PASS criterion 6: fixture LOSO mean accuracy {:.3} at epoch {peak_epoch} (<=20), runtime {elapsed:.0}s < 300s, spindle-channel top-3 rate {:.2} ({top3_hits}/{top3_total})",
        peak_acc, rate
    );
}

#[test]
fn criterion_7_feature_sanity() {
    // 10 Hz tone: alpha relative power > 0.9.
    let mut signal = Array2::zeros((30, WINDOW_LEN));
    for j in 0..WINDOW_LEN {
        signal[[7, j]] =
            (20.0 * (std::f64::consts::TAU * 10.0 * j as f64 / RATE_HZ as f64).sin()) as f32;
    }
    let features = relative_power(&welch_psd(&signal).unwrap());
    let alpha = features.values[7 * 4 + 2];
    assert!(alpha > 0.9, "alpha share {alpha}");

    // Constant series: both template entropies exactly zero.
    let constant = vec![1.25f64; WINDOW_LEN];
    let (samp, _) = sample_entropy(&constant, 2, 0.2);
    let (apen, _) = approximate_entropy(&constant, 2, 0.2);
    assert_eq!(samp, 0.0);
    assert_eq!(apen, 0.0);

    // Flat wavelet scale energies: entropy ln 7 within 1e-9.
    let (entropy, flagged) = scale_entropy(&[0.42; 7]);
    assert!(!flagged);
    assert!((entropy - 7.0f64.ln()).abs() <= 1e-9);
    println!(
        "PASS criterion 7: tone alpha share {alpha:.3} > 0.9, constant ApEn = SampEn = 0, flat wavelet entropy = ln 7 +- 1e-9"
    );
}

#[test]
fn criterion_8_determinism() {
    let bundle = synth_generate_traced(2, 10, 8).unwrap().bundle;
    let config = ModelConfig::default();

    // Byte-identical checkpoints across runs.
    let dir = std::env::temp_dir().join(format!("acc8_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut bytes = Vec::new();
    for run in 0..2 {
        let (params, _) = fit(&bundle, &config, 2, 99).unwrap();
        let path = dir.join(format!("run{run}.ckpt"));
        save_checkpoint(&path, &config, &params, 99, 2).unwrap();
        bytes.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1], "checkpoints differ between runs");
    assert!(load_checkpoint(&dir.join("run0.ckpt")).is_ok());
    std::fs::remove_dir_all(&dir).unwrap();

    // Byte-identical report CSVs across thread counts.
    let csv_for = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                evaluate_loso_balanced(&bundle, &config, 2, 2, 31)
                    .unwrap()
                    .csv_string()
            })
    };
    let single = csv_for(1);
    let quad = csv_for(4);
    assert_eq!(single, quad, "report CSVs differ across thread counts");
    println!("PASS criterion 8: identical seeds give byte-identical checkpoints and report CSVs across runs and thread counts");
}

#[test]
fn criterion_9_real_data_reproduction() {
    let Ok(dir) = std::env::var("SEPCNN_DATA_DIR") else {
        println!("SKIP criterion 9: real dataset not available (set SEPCNN_DATA_DIR to a directory with balanced.eegb and unbalanced.eegb)");
        return;
    };
    let dir = std::path::PathBuf::from(dir);
    let balanced = sepcnn::dataset::import_container(&dir.join("balanced.eegb")).unwrap();
    let unbalanced = sepcnn::dataset::import_container(&dir.join("unbalanced.eegb")).unwrap();
    let config = ModelConfig::default();

    // Reduced budget: 3 repeats, epochs 1-15.
    let report = evaluate_loso_balanced(&balanced, &config, 15, 3, 7).unwrap();
    let (peak_epoch, peak_acc) = report.peak_accuracy().unwrap();
    assert!(
        (peak_acc - 0.7835).abs() <= 0.03,
        "balanced LOSO peak {peak_acc:.4} at epoch {peak_epoch}, target 0.7835 +- 0.03"
    );

    let gnb = evaluate_baseline(&balanced, Extractor::LogPower, ClassifierKind::Gnb).unwrap();
    let gnb_acc = gnb.final_epoch_mean_accuracy().unwrap();
    assert!(
        (gnb_acc - 0.7268).abs() <= 0.03,
        "LogPower+GNB mean {gnb_acc:.4}, target 0.7268 +- 0.03"
    );

    let unb = evaluate_loso_unbalanced(&balanced, &unbalanced, &config, 11, 7).unwrap();
    let unb_acc = unb.final_epoch_mean_accuracy().unwrap();
    assert!(
        (unb_acc - 0.7770).abs() <= 0.03,
        "unbalanced-protocol mean {unb_acc:.4}, target 0.7770 +- 0.03"
    );
    println!(
        "PASS criterion 9: balanced peak {peak_acc:.4} (epoch {peak_epoch}), LogPower+GNB {gnb_acc:.4}, unbalanced {unb_acc:.4} all within +-3 points of their targets"
    );
}
