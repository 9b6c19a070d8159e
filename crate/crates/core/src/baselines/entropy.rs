//! Sample, approximate, fuzzy, and spectral entropy features.
//!
//! All template entropies use `m = 2` and tolerance `r = 0.2 * SD` of the
//! channel. Sample entropy excludes self-matches (`-ln(A/B)` over ordered
//! pairs); approximate entropy is the classic `phi_m - phi_{m+1}` with
//! self-matches; fuzzy entropy removes each template's mean and uses the
//! membership `exp(-(d/r)^2)`; spectral entropy is the Shannon entropy of the
//! Welch PSD normalised over the 1-32 Hz bins.

use ndarray::Array2;

use super::welch::welch_psd_series;
use super::{FeatureFlag, FeatureVector};

const TEMPLATE_LEN: usize = 2;
const TOLERANCE_FACTOR: f64 = 0.2;
/// Spectral-entropy bins, 1 Hz grid.
const SPECTRAL_LO: usize = 1;
const SPECTRAL_HI: usize = 32;

fn population_sd(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Sample entropy: `-ln(A/B)` with Chebyshev distance and no self-matches.
/// Degenerate match counts (A or B zero) flag and return 0.
pub fn sample_entropy(x: &[f64], m: usize, r_factor: f64) -> (f64, bool) {
    let n = x.len();
    if n < m + 2 {
        return (0.0, true);
    }
    let r = r_factor * population_sd(x);
    let templates = n - m; // both m and m+1 windows exist for i < templates
    let mut count_m = 0u64;
    let mut count_m1 = 0u64;
    for i in 0..templates {
        for j in (i + 1)..templates {
            let mut d_m = 0.0f64;
            for k in 0..m {
                d_m = d_m.max((x[i + k] - x[j + k]).abs());
            }
            if d_m <= r {
                count_m += 1;
                let d_m1 = d_m.max((x[i + m] - x[j + m]).abs());
                if d_m1 <= r {
                    count_m1 += 1;
                }
            }
        }
    }
    if count_m == 0 || count_m1 == 0 {
        return (0.0, true);
    }
    (-((count_m1 as f64) / (count_m as f64)).ln(), false)
}

/// Approximate entropy: `phi_m - phi_{m+1}`, self-matches included.
pub fn approximate_entropy(x: &[f64], m: usize, r_factor: f64) -> (f64, bool) {
    let n = x.len();
    if n < m + 2 {
        return (0.0, true);
    }
    let r = r_factor * population_sd(x);
    let phi = |m: usize| -> f64 {
        let count = n - m + 1;
        let mut acc = 0.0;
        for i in 0..count {
            let mut matches = 0usize;
            for j in 0..count {
                let mut d = 0.0f64;
                for k in 0..m {
                    d = d.max((x[i + k] - x[j + k]).abs());
                    if d > r {
                        break;
                    }
                }
                if d <= r {
                    matches += 1;
                }
            }
            acc += ((matches as f64) / (count as f64)).ln();
        }
        acc / count as f64
    };
    (phi(m) - phi(m + 1), false)
}

/// Fuzzy entropy with mean-removed templates and Gaussian membership
/// `exp(-(d/r)^2)`; a zero distance counts as full membership so constant
/// series read exactly zero.
pub fn fuzzy_entropy(x: &[f64], m: usize, r_factor: f64) -> (f64, bool) {
    let n = x.len();
    if n < m + 2 {
        return (0.0, true);
    }
    let r = r_factor * population_sd(x);
    let phi = |m: usize| -> f64 {
        let count = n - m; // same index range for m and m+1
        let mut means = vec![0.0f64; count];
        for (i, slot) in means.iter_mut().enumerate() {
            *slot = x[i..i + m].iter().sum::<f64>() / m as f64;
        }
        let mut acc = 0.0;
        for i in 0..count {
            let mut sim = 0.0;
            for j in 0..count {
                if i == j {
                    continue;
                }
                let mut d = 0.0f64;
                for k in 0..m {
                    d = d.max(((x[i + k] - means[i]) - (x[j + k] - means[j])).abs());
                }
                sim += if d == 0.0 {
                    1.0
                } else {
                    (-(d / r) * (d / r)).exp()
                };
            }
            acc += sim / (count - 1) as f64;
        }
        acc / count as f64
    };
    let phi_m = phi(m);
    let phi_m1 = phi(m + 1);
    if phi_m <= 0.0 || phi_m1 <= 0.0 {
        return (0.0, true);
    }
    (phi_m.ln() - phi_m1.ln(), false)
}

/// Shannon entropy of the Welch PSD normalised to sum 1 over 1-32 Hz.
/// A zero spectrum (constant series) is flagged.
pub fn spectral_entropy(x: &[f64]) -> (f64, bool) {
    let psd = welch_psd_series(x);
    let bins = &psd[SPECTRAL_LO..=SPECTRAL_HI];
    let total: f64 = bins.iter().sum();
    if total <= 0.0 {
        return (0.0, true);
    }
    let probs: Vec<f64> = bins.iter().map(|v| v / total).collect();
    (shannon_entropy(&probs), false)
}

/// `-sum p ln p` over positive entries.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Sample, approximate, fuzzy, spectral entropy per channel (raw values; the
/// per-subject normalisation happens at dataset level).
pub fn four_entropies(signal: &Array2<f32>) -> FeatureVector {
    let (channels, len) = signal.dim();
    let mut values = Vec::with_capacity(channels * 4);
    let mut flags = Vec::new();
    let mut series = vec![0.0f64; len];
    for c in 0..channels {
        for (slot, &v) in series.iter_mut().zip(signal.row(c)) {
            *slot = f64::from(v);
        }
        let (samp, f1) = sample_entropy(&series, TEMPLATE_LEN, TOLERANCE_FACTOR);
        let (apen, f2) = approximate_entropy(&series, TEMPLATE_LEN, TOLERANCE_FACTOR);
        let (fuzz, f3) = fuzzy_entropy(&series, TEMPLATE_LEN, TOLERANCE_FACTOR);
        let (spec, f4) = spectral_entropy(&series);
        values.extend_from_slice(&[samp, apen, fuzz, spec]);
        for (hit, note) in [
            (f1, "sample entropy degenerate"),
            (f2, "approximate entropy degenerate"),
            (f3, "fuzzy entropy degenerate"),
            (f4, "spectral entropy degenerate"),
        ] {
            if hit {
                flags.push(FeatureFlag { channel: c, note });
            }
        }
    }
    let names = ["sampen", "apen", "fuzzyen", "specen"];
    FeatureVector {
        schema: (0..channels)
            .flat_map(|c| names.iter().map(move |n| format!("ch{c}_{n}")))
            .collect(),
        values,
        flags,
    }
}
