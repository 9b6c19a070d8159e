//! Property tests over the dataset operations and the container format.

use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;
use sepcnn::dataset::{
    build_balanced, export_container, import_container, loso_split, BundleKind, DatasetBundle,
    EegSample, Label, CHANNELS, WINDOW_LEN,
};

/// Deterministic random bundle driven by a proptest-chosen seed.
fn seeded_bundle(seed: u64, subjects: u16, per_subject: usize) -> DatasetBundle {
    let mut rng = sepcnn::seed::rng(seed, &[0xB0B]);
    let mut samples = Vec::new();
    for subject in 1..=subjects {
        for k in 0..per_subject {
            let mut signal = Array2::zeros((CHANNELS, WINDOW_LEN));
            for v in signal.iter_mut() {
                *v = rng.random_range(-100.0f32..100.0);
            }
            samples.push(EegSample {
                subject_id: subject,
                signal,
                label: if k % 2 == 0 {
                    Label::Alert
                } else {
                    Label::Drowsy
                },
                local_rt: Some(rng.random_range(0.3..4.0)),
            });
        }
    }
    DatasetBundle::new(BundleKind::Unbalanced, samples)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn container_round_trip_is_bit_exact(seed in any::<u64>(), subjects in 2u16..4, per in 2usize..5) {
        let bundle = seeded_bundle(seed, subjects, per);
        let dir = std::env::temp_dir().join(format!("prop_eegb_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("{seed}.eegb"));
        export_container(&bundle, &path).unwrap();
        let loaded = import_container(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        prop_assert_eq!(loaded.samples.len(), bundle.samples.len());
        for (a, b) in bundle.samples.iter().zip(&loaded.samples) {
            prop_assert_eq!(a.subject_id, b.subject_id);
            prop_assert_eq!(a.label, b.label);
            for (x, y) in a.signal.iter().zip(b.signal.iter()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn loso_split_partitions_without_loss(seed in any::<u64>(), subjects in 2u16..5) {
        let bundle = seeded_bundle(seed, subjects, 4);
        let held_out = 1 + (seed % subjects as u64) as u16;
        let (train, test) = loso_split(&bundle, held_out).unwrap();
        prop_assert_eq!(train.samples.len() + test.samples.len(), bundle.samples.len());
        prop_assert!(test.samples.iter().all(|s| s.subject_id == held_out));
        prop_assert!(train.samples.iter().all(|s| s.subject_id != held_out));
        // Nothing lost: every original sample appears in exactly one half.
        let mut recombined: Vec<&EegSample> = train.samples.iter().chain(&test.samples).collect();
        recombined.sort_by_key(|s| (s.subject_id, s.signal[[0, 0]].to_bits()));
        let mut original: Vec<&EegSample> = bundle.samples.iter().collect();
        original.sort_by_key(|s| (s.subject_id, s.signal[[0, 0]].to_bits()));
        for (a, b) in original.iter().zip(&recombined) {
            prop_assert_eq!(a.signal[[0, 0]].to_bits(), b.signal[[0, 0]].to_bits());
        }
    }

    #[test]
    fn balancing_is_idempotent_and_balanced(seed in any::<u64>(), subjects in 2u16..4) {
        // Unequal class counts per subject.
        let mut bundle = seeded_bundle(seed, subjects, 6);
        bundle.samples.retain(|s| !(s.subject_id == 1 && s.label == Label::Drowsy && s.signal[[0,0]] > 0.0));
        if bundle.per_subject_counts().values().any(|&(a, d)| a == 0 || d == 0) {
            return Ok(());
        }
        let balanced = build_balanced(&bundle).unwrap();
        prop_assert!(balanced.is_balanced_per_subject());
        let again = build_balanced(&balanced).unwrap();
        prop_assert_eq!(&again.samples, &balanced.samples);
        prop_assert_eq!(again.kind, BundleKind::Balanced);
    }
}
