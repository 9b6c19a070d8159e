//! Deterministic synthetic EEG fixture.
//!
//! Drowsy samples carry 10 Hz burst "spindles" (0.5-1 s, Hann envelope) on one
//! randomly chosen central channel over a pink-noise background; alert samples
//! carry 20-25 Hz activity on peripheral channels plus occasional slow frontal
//! deflections. A per-subject channel-gain vector mimics inter-subject
//! variability. Everything derives from the seed, so two runs produce
//! byte-identical bundles.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{BundleKind, DatasetBundle, EegSample, Label, CHANNELS, RATE_HZ, WINDOW_LEN};
use crate::error::{Error, Result};
use crate::seed;

/// C3, CZ, C4, CP3, CPZ, CP4.
pub const CENTRAL_CHANNELS: [usize; 6] = [13, 14, 15, 18, 19, 20];
/// F7, F8, FT7, FT8, T3, T4, TP7, TP8, T5, T6.
const PERIPHERAL_CHANNELS: [usize; 10] = [2, 6, 7, 11, 12, 16, 17, 21, 22, 26];
/// FP1, FP2, F3, FZ, F4.
const FRONTAL_CHANNELS: [usize; 5] = [0, 1, 3, 4, 5];

const TAG_SAMPLE: u64 = 0x5A31;
const TAG_GAIN: u64 = 0x5A32;

/// A synthetic bundle plus, per sample, the central channel its spindles were
/// injected on (`None` for alert samples).
#[derive(Debug, Clone)]
pub struct SynthBundle {
    pub bundle: DatasetBundle,
    pub spindle_channels: Vec<Option<usize>>,
}

/// Generate `n_subjects x n_per_class x 2` samples, balanced per subject.
pub fn synth_generate(n_subjects: usize, n_per_class: usize, seed: u64) -> Result<DatasetBundle> {
    Ok(synth_generate_traced(n_subjects, n_per_class, seed)?.bundle)
}

/// As [`synth_generate`], also reporting where each spindle went.
pub fn synth_generate_traced(
    n_subjects: usize,
    n_per_class: usize,
    seed: u64,
) -> Result<SynthBundle> {
    if n_subjects < 2 {
        return Err(Error::Invalid("need at least 2 subjects".into()));
    }
    if n_per_class < 10 {
        return Err(Error::Invalid("need at least 10 samples per class".into()));
    }
    let mut samples = Vec::with_capacity(n_subjects * n_per_class * 2);
    let mut spindle_channels = Vec::with_capacity(samples.capacity());
    for subject in 0..n_subjects {
        let mut gain_rng = seed::rng(seed, &[TAG_GAIN, subject as u64]);
        let gains: Vec<f64> = (0..CHANNELS)
            .map(|_| gain_rng.random_range(0.8..1.25))
            .collect();
        for class in [Label::Alert, Label::Drowsy] {
            for k in 0..n_per_class {
                let mut rng = seed::rng(
                    seed,
                    &[TAG_SAMPLE, subject as u64, class.as_u8() as u64, k as u64],
                );
                let (signal, spindle_ch, local_rt) = synth_sample(class, &gains, &mut rng);
                samples.push(EegSample {
                    subject_id: (subject + 1) as u16,
                    signal,
                    label: class,
                    local_rt: Some(local_rt),
                });
                spindle_channels.push(spindle_ch);
            }
        }
    }
    Ok(SynthBundle {
        bundle: DatasetBundle::new(BundleKind::Synthetic, samples),
        spindle_channels,
    })
}

fn synth_sample(
    class: Label,
    gains: &[f64],
    rng: &mut ChaCha8Rng,
) -> (Array2<f32>, Option<usize>, f64) {
    let fs = RATE_HZ as f64;
    let mut chans = vec![vec![0.0f64; WINDOW_LEN]; CHANNELS];
    for ch in chans.iter_mut() {
        pink_noise(ch, 7.0, rng);
    }

    let mut spindle_ch = None;
    let local_rt;
    match class {
        Label::Drowsy => {
            let ch = CENTRAL_CHANNELS[rng.random_range(0..CENTRAL_CHANNELS.len())];
            spindle_ch = Some(ch);
            for _ in 0..3 {
                let dur = rng.random_range(80..=128); // 0.6-1 s
                let onset = rng.random_range(0..WINDOW_LEN - dur);
                let amp = rng.random_range(18.0..26.0);
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                add_burst(&mut chans[ch], onset, dur, 10.0, amp, phase, fs);
            }
            local_rt = rng.random_range(2.0..3.5);
        }
        Label::Alert => {
            let n_beta = rng.random_range(2..=3);
            for _ in 0..n_beta {
                let ch = PERIPHERAL_CHANNELS[rng.random_range(0..PERIPHERAL_CHANNELS.len())];
                let freq = rng.random_range(20.0..25.0);
                let dur = rng.random_range(64..=128);
                let onset = rng.random_range(0..WINDOW_LEN - dur);
                let amp = rng.random_range(6.0..9.0);
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                add_burst(&mut chans[ch], onset, dur, freq, amp, phase, fs);
            }
            if rng.random_range(0.0..1.0) < 0.6 {
                let ch = FRONTAL_CHANNELS[rng.random_range(0..FRONTAL_CHANNELS.len())];
                let center = rng.random_range(40..WINDOW_LEN - 40);
                let amp = rng.random_range(30.0..50.0);
                add_slow_deflection(&mut chans[ch], center, amp, fs);
            }
            local_rt = rng.random_range(0.45..0.85);
        }
    }

    let mut signal = Array2::zeros((CHANNELS, WINDOW_LEN));
    for (c, ch) in chans.iter().enumerate() {
        for (j, &v) in ch.iter().enumerate() {
            signal[[c, j]] = (v * gains[c]) as f32;
        }
    }
    (signal, spindle_ch, local_rt)
}

/// Approximate 1/f noise (Kellet three-pole filter over Gaussian white noise),
/// rescaled to the requested RMS.
fn pink_noise(out: &mut [f64], rms: f64, rng: &mut ChaCha8Rng) {
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    for slot in out.iter_mut() {
        let white = gaussian(rng);
        b0 = 0.99765 * b0 + white * 0.0990460;
        b1 = 0.96300 * b1 + white * 0.2965164;
        b2 = 0.57000 * b2 + white * 1.0526913;
        *slot = b0 + b1 + b2 + white * 0.1848;
    }
    let mean = out.iter().sum::<f64>() / out.len() as f64;
    let ms = out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / out.len() as f64;
    if ms > 0.0 {
        let scale = rms / ms.sqrt();
        for v in out.iter_mut() {
            *v = (*v - mean) * scale;
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; u clamped away from zero.
    let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let v: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    (-2.0 * u.ln()).sqrt() * v.cos()
}

fn add_burst(ch: &mut [f64], onset: usize, dur: usize, freq: f64, amp: f64, phase: f64, fs: f64) {
    for t in 0..dur {
        let envelope = 0.5 * (1.0 - (std::f64::consts::TAU * t as f64 / dur as f64).cos());
        let value =
            amp * envelope * (std::f64::consts::TAU * freq * (onset + t) as f64 / fs + phase).sin();
        ch[onset + t] += value;
    }
}

fn add_slow_deflection(ch: &mut [f64], center: usize, amp: f64, fs: f64) {
    let sigma = 0.15 * fs; // ~19 samples
    for (t, v) in ch.iter_mut().enumerate() {
        let d = t as f64 - center as f64;
        *v += amp * (-0.5 * d * d / (sigma * sigma)).exp();
    }
}
