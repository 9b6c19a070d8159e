//! Band-power features over the Welch PSD.

use super::welch::PsdEstimate;
use super::{FeatureFlag, FeatureVector};

/// Delta, Theta, Alpha, Beta in Hz.
pub const BANDS: [(f64, f64, &str); 4] = [
    (1.0, 4.0, "delta"),
    (4.0, 8.0, "theta"),
    (8.0, 12.0, "alpha"),
    (12.0, 30.0, "beta"),
];

const POWER_FLOOR: f64 = 1e-12;

/// Trapezoidal integral of one channel's PSD over `[lo, hi]` Hz.
pub fn band_power(psd: &PsdEstimate, channel: usize, lo: f64, hi: f64) -> f64 {
    let freqs = &psd.frequencies;
    let row = psd.power.row(channel);
    let mut acc = 0.0;
    for k in 0..freqs.len() - 1 {
        if freqs[k] >= lo && freqs[k + 1] <= hi {
            acc += 0.5 * (row[k] + row[k + 1]) * (freqs[k + 1] - freqs[k]);
        }
    }
    acc
}

/// `channels x 4` matrix of band powers.
pub fn band_power_table(psd: &PsdEstimate) -> Vec<[f64; 4]> {
    (0..psd.power.nrows())
        .map(|c| {
            let mut row = [0.0; 4];
            for (b, &(lo, hi, _)) in BANDS.iter().enumerate() {
                row[b] = band_power(psd, c, lo, hi);
            }
            row
        })
        .collect()
}

/// Relative band power: each channel's four band powers divided by their sum,
/// so the four values add to one. An all-zero channel reads uniform 0.25 and
/// is flagged.
pub fn relative_power(psd: &PsdEstimate) -> FeatureVector {
    let table = band_power_table(psd);
    let mut values = Vec::with_capacity(table.len() * 4);
    let mut flags = Vec::new();
    for (c, row) in table.iter().enumerate() {
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            values.extend_from_slice(&[0.25; 4]);
            flags.push(FeatureFlag {
                channel: c,
                note: "zero total band power",
            });
        } else {
            values.extend(row.iter().map(|v| v / total));
        }
    }
    FeatureVector {
        values,
        schema: band_schema("rel"),
        flags,
    }
}

/// Natural log of each band power (floored at 1e-12).
pub fn log_power(psd: &PsdEstimate) -> FeatureVector {
    let table = band_power_table(psd);
    let values = table
        .iter()
        .flat_map(|row| row.iter().map(|v| (v + POWER_FLOOR).ln()))
        .collect();
    FeatureVector {
        values,
        schema: band_schema("log"),
        flags: Vec::new(),
    }
}

/// The four drowsiness ratios per channel:
/// `(theta+alpha)/beta`, `alpha/beta`, `(theta+alpha)/(alpha+beta)`,
/// `theta/beta`; denominators floored at 1e-12.
pub fn power_ratios(psd: &PsdEstimate) -> FeatureVector {
    let table = band_power_table(psd);
    let mut values = Vec::with_capacity(table.len() * 4);
    for row in &table {
        let (theta, alpha, beta) = (row[1], row[2], row[3]);
        let d = |v: f64| v.max(POWER_FLOOR);
        values.push((theta + alpha) / d(beta));
        values.push(alpha / d(beta));
        values.push((theta + alpha) / d(alpha + beta));
        values.push(theta / d(beta));
    }
    let names = [
        "theta_alpha_over_beta",
        "alpha_over_beta",
        "theta_alpha_over_alpha_beta",
        "theta_over_beta",
    ];
    let schema = (0..table.len())
        .flat_map(|c| names.iter().map(move |n| format!("ch{c}_{n}")))
        .collect();
    FeatureVector {
        values,
        schema,
        flags: Vec::new(),
    }
}

fn band_schema(prefix: &str) -> Vec<String> {
    (0..crate::dataset::CHANNELS)
        .flat_map(|c| {
            BANDS
                .iter()
                .map(move |(_, _, name)| format!("ch{c}_{prefix}_{name}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::welch::{welch_psd, N_BINS};
    use crate::dataset::{CHANNELS, RATE_HZ, WINDOW_LEN};
    use ndarray::Array2;

    fn flat_psd(value: f64) -> PsdEstimate {
        PsdEstimate {
            frequencies: (0..N_BINS).map(|k| k as f64).collect(),
            power: Array2::from_elem((CHANNELS, N_BINS), value),
        }
    }

    /// Engineered PSD whose trapezoidal theta, alpha and beta integrals are
    /// exactly equal (4c each): constant density c on 4-12 Hz, and the beta
    /// interior chosen so `c/2 + 17*t = 4c`.
    fn psd_with_equal_theta_alpha_beta() -> PsdEstimate {
        let c = 2.0;
        let t = 3.5 * c / 17.0;
        let mut power = Array2::zeros((CHANNELS, N_BINS));
        for ch in 0..CHANNELS {
            for k in 4..=12 {
                power[[ch, k]] = c;
            }
            for k in 13..=29 {
                power[[ch, k]] = t;
            }
        }
        PsdEstimate {
            frequencies: (0..N_BINS).map(|k| k as f64).collect(),
            power,
        }
    }

    #[test]
    fn tone_concentrates_alpha_share() {
        let mut signal = Array2::zeros((CHANNELS, WINDOW_LEN));
        for j in 0..WINDOW_LEN {
            signal[[5, j]] =
                (10.0 * (std::f64::consts::TAU * 10.0 * j as f64 / RATE_HZ as f64).sin()) as f32;
        }
        let features = relative_power(&welch_psd(&signal).unwrap());
        let alpha = features.values[5 * 4 + 2];
        assert!(alpha > 0.9, "alpha share {alpha}");
    }

    #[test]
    fn flat_spectrum_shares_match_bandwidths() {
        let features = relative_power(&flat_psd(2.0));
        // Bandwidths 3:4:4:18 over total 29.
        let expected = [3.0 / 29.0, 4.0 / 29.0, 4.0 / 29.0, 18.0 / 29.0];
        for c in 0..CHANNELS {
            for b in 0..4 {
                assert!((features.values[c * 4 + b] - expected[b]).abs() < 1e-12);
            }
        }
        assert_eq!(features.values.len(), 120);
        assert!(features.flags.is_empty());
    }

    #[test]
    fn relative_power_rows_sum_to_one() {
        let bundle = crate::dataset::synth_generate(2, 10, 3).unwrap();
        let psd = welch_psd(&bundle.samples[0].signal).unwrap();
        let features = relative_power(&psd);
        for c in 0..CHANNELS {
            let sum: f64 = features.values[c * 4..(c + 1) * 4].iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_psd_flags_uniform_shares() {
        let features = relative_power(&flat_psd(0.0));
        assert_eq!(features.flags.len(), CHANNELS);
        assert!(features.values.iter().all(|&v| v == 0.25));
    }

    #[test]
    fn log_power_shifts_by_log_of_power_scale() {
        let bundle = crate::dataset::synth_generate(2, 10, 4).unwrap();
        let signal = &bundle.samples[0].signal;
        let scaled = signal.mapv(|v| v * 10.0);
        let base = log_power(&welch_psd(signal).unwrap());
        let shifted = log_power(&welch_psd(&scaled).unwrap());
        let expected = 100.0f64.ln();
        for (a, b) in base.values.iter().zip(&shifted.values) {
            assert!((b - a - expected).abs() < 1e-6, "shift {}", b - a);
        }
    }

    #[test]
    fn log_power_of_silence_hits_floor() {
        let psd = flat_psd(0.0);
        let features = log_power(&psd);
        assert!(features.values.iter().all(|&v| v == 1e-12f64.ln()));
    }

    #[test]
    fn equal_band_powers_give_algebraic_ratios() {
        let psd = psd_with_equal_theta_alpha_beta();
        let table = band_power_table(&psd);
        assert!((table[0][1] - table[0][2]).abs() < 1e-12);
        assert!((table[0][1] - table[0][3]).abs() < 1e-12);
        let features = power_ratios(&psd);
        let expected = [2.0, 1.0, 1.0, 1.0];
        for b in 0..4 {
            assert!(
                (features.values[b] - expected[b]).abs() < 1e-12,
                "ratio {b}: {}",
                features.values[b]
            );
        }
    }

    #[test]
    fn pure_beta_drives_ratios_to_zero() {
        let mut signal = Array2::zeros((CHANNELS, WINDOW_LEN));
        for j in 0..WINDOW_LEN {
            signal[[0, j]] =
                (5.0 * (std::f64::consts::TAU * 20.0 * j as f64 / RATE_HZ as f64).sin()) as f32;
        }
        let features = power_ratios(&welch_psd(&signal).unwrap());
        for b in 0..4 {
            assert!(
                features.values[b] < 0.05,
                "ratio {b}: {}",
                features.values[b]
            );
        }
    }

    #[test]
    fn ratios_match_direct_formula_oracle() {
        let bundle = crate::dataset::synth_generate(2, 10, 6).unwrap();
        let psd = welch_psd(&bundle.samples[3].signal).unwrap();
        let features = power_ratios(&psd);
        let table = band_power_table(&psd);
        for (c, row) in table.iter().enumerate() {
            let (theta, alpha, beta) = (row[1], row[2], row[3]);
            let expected = [
                (theta + alpha) / beta.max(1e-12),
                alpha / beta.max(1e-12),
                (theta + alpha) / (alpha + beta).max(1e-12),
                theta / beta.max(1e-12),
            ];
            for b in 0..4 {
                assert!((features.values[c * 4 + b] - expected[b]).abs() < 1e-12);
            }
        }
    }
}
