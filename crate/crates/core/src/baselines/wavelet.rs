//! Mexican-hat wavelet entropy.
//!
//! Each channel is convolved ("same" length, zero-padded edges) with the
//! Mexican hat `psi(t/a)/sqrt(a)` at scales 0.5, 1, 2, 4, 8, 16, 32 samples
//! (64 Hz down to 1 Hz at 128 Hz sampling). The kernel support is truncated
//! at `|t| <= 8a`, where the hat has decayed below 1e-13. Scale energies are
//! normalised to a distribution and the feature is its Shannon entropy.

use super::{FeatureFlag, FeatureVector};
use ndarray::Array2;

/// Wavelet scales in samples.
pub const WAVELET_SCALES: [f64; 7] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0];

/// `psi(u) = 2 / (sqrt(3) * pi^(1/4)) * (1 - u^2) * exp(-u^2 / 2)`.
fn mexican_hat(u: f64) -> f64 {
    let norm = 2.0 / (3.0f64.sqrt() * std::f64::consts::PI.powf(0.25));
    norm * (1.0 - u * u) * (-0.5 * u * u).exp()
}

/// Sampled kernel `psi(t/a)/sqrt(a)` for `t in -ceil(8a)..=ceil(8a)`.
pub fn ricker_kernel(scale: f64) -> Vec<f64> {
    let half = (8.0 * scale).ceil() as i64;
    (-half..=half)
        .map(|t| mexican_hat(t as f64 / scale) / scale.sqrt())
        .collect()
}

/// Energy (sum of squared same-length convolution coefficients) per scale.
pub fn wavelet_scale_energies(x: &[f64]) -> [f64; 7] {
    let n = x.len() as i64;
    let mut energies = [0.0; 7];
    for (s, &scale) in WAVELET_SCALES.iter().enumerate() {
        let kernel = ricker_kernel(scale);
        let half = (kernel.len() / 2) as i64;
        let mut energy = 0.0;
        for center in 0..n {
            let mut acc = 0.0;
            for (k, &w) in kernel.iter().enumerate() {
                let idx = center + (k as i64 - half);
                if idx >= 0 && idx < n {
                    acc += x[idx as usize] * w;
                }
            }
            energy += acc * acc;
        }
        energies[s] = energy;
    }
    energies
}

/// Shannon entropy of normalised energies; flagged when the total is zero.
pub fn scale_entropy(energies: &[f64]) -> (f64, bool) {
    let total: f64 = energies.iter().sum();
    if total <= 0.0 {
        return (0.0, true);
    }
    let mut entropy = 0.0;
    for &e in energies {
        let p = e / total;
        if p > 0.0 {
            entropy -= p * p.ln();
        }
    }
    (entropy, false)
}

/// One wavelet-entropy feature per channel.
pub fn wavelet_entropy(signal: &Array2<f32>) -> FeatureVector {
    let (channels, len) = signal.dim();
    let mut values = Vec::with_capacity(channels);
    let mut flags = Vec::new();
    let mut series = vec![0.0f64; len];
    for c in 0..channels {
        for (slot, &v) in series.iter_mut().zip(signal.row(c)) {
            *slot = f64::from(v);
        }
        let (entropy, degenerate) = scale_entropy(&wavelet_scale_energies(&series));
        values.push(entropy);
        if degenerate {
            flags.push(FeatureFlag {
                channel: c,
                note: "zero wavelet energy",
            });
        }
    }
    FeatureVector {
        schema: (0..channels)
            .map(|c| format!("ch{c}_wavelet_entropy"))
            .collect(),
        values,
        flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{CHANNELS, RATE_HZ, WINDOW_LEN};
    use rand::Rng;

    #[test]
    fn equal_energies_hit_the_ln7_bound() {
        let (h, flag) = scale_entropy(&[3.5; 7]);
        assert!(!flag);
        assert!((h - 7.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn concentrated_energy_gives_zero_entropy() {
        let (h, flag) = scale_entropy(&[0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(!flag);
        assert_eq!(h, 0.0);
    }

    #[test]
    fn zero_signal_is_flagged() {
        let signal = Array2::zeros((CHANNELS, WINDOW_LEN));
        let features = wavelet_entropy(&signal);
        assert_eq!(features.flags.len(), CHANNELS);
        assert!(features.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn narrowband_tone_has_lower_entropy_than_white_noise() {
        let mut tone = vec![0.0f64; WINDOW_LEN];
        for (j, v) in tone.iter_mut().enumerate() {
            *v = (std::f64::consts::TAU * 8.0 * j as f64 / RATE_HZ as f64).sin();
        }
        let mut rng = crate::seed::rng(17, &[3]);
        // Match the tone's variance.
        let target_sd = (tone.iter().map(|v| v * v).sum::<f64>() / tone.len() as f64).sqrt();
        let noise: Vec<f64> = (0..WINDOW_LEN)
            .map(|_| rng.random_range(-1.0..1.0) * target_sd * 3.0f64.sqrt())
            .collect();
        let (h_tone, _) = scale_entropy(&wavelet_scale_energies(&tone));
        let (h_noise, _) = scale_entropy(&wavelet_scale_energies(&noise));
        assert!(
            h_tone < h_noise,
            "tone entropy {h_tone} should be below noise entropy {h_noise}"
        );
    }

    #[test]
    fn kernel_tails_are_negligible() {
        let kernel = ricker_kernel(4.0);
        assert!(kernel.first().unwrap().abs() < 1e-12);
        assert!(kernel.last().unwrap().abs() < 1e-12);
        // Peak at the centre.
        let mid = kernel.len() / 2;
        assert!(kernel[mid] > 0.0);
        assert!(kernel.iter().all(|&v| v <= kernel[mid]));
    }
}
