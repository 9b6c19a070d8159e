//! Welch power spectral density estimation.
//!
//! Configuration: 128-sample segments, 50% overlap (five segments on a
//! 384-point window), periodic Hann window, per-segment mean removal,
//! one-sided density in uV^2/Hz averaged over segments. At 128 Hz this puts
//! the bins on an exact 1 Hz grid from 0 to 64 Hz.

use ndarray::Array2;

use crate::dataset::RATE_HZ;
use crate::error::{Error, Result};

/// Segment and FFT length.
pub const SEGMENT_LEN: usize = 128;
/// Hop between segment starts (50% overlap).
pub const SEGMENT_STEP: usize = 64;
/// One-sided bin count.
pub const N_BINS: usize = SEGMENT_LEN / 2 + 1;

/// One-sided PSD per channel.
#[derive(Debug, Clone)]
pub struct PsdEstimate {
    /// Ascending bin frequencies in Hz (1 Hz resolution).
    pub frequencies: Vec<f64>,
    /// `channels x N_BINS` power densities, uV^2/Hz.
    pub power: Array2<f64>,
}

/// Welch PSD of every channel of a `channels x len` signal.
pub fn welch_psd(signal: &Array2<f32>) -> Result<PsdEstimate> {
    let (channels, len) = signal.dim();
    if len < SEGMENT_LEN {
        return Err(Error::Shape(format!(
            "signal length {len} shorter than segment {SEGMENT_LEN}"
        )));
    }
    let mut power = Array2::zeros((channels, N_BINS));
    let mut series = vec![0.0f64; len];
    for c in 0..channels {
        for (slot, &v) in series.iter_mut().zip(signal.row(c)) {
            *slot = f64::from(v);
        }
        let psd = welch_psd_series(&series);
        for (k, v) in psd.into_iter().enumerate() {
            power[[c, k]] = v;
        }
    }
    Ok(PsdEstimate {
        frequencies: (0..N_BINS)
            .map(|k| k as f64 * RATE_HZ as f64 / SEGMENT_LEN as f64)
            .collect(),
        power,
    })
}

/// Welch PSD of a single series (length >= 128).
pub fn welch_psd_series(x: &[f64]) -> Vec<f64> {
    let window = hann_periodic(SEGMENT_LEN);
    let window_energy: f64 = window.iter().map(|w| w * w).sum();
    let scale = 1.0 / (RATE_HZ as f64 * window_energy);

    let n_segments = (x.len() - SEGMENT_LEN) / SEGMENT_STEP + 1;
    let mut psd = vec![0.0f64; N_BINS];
    let mut re = vec![0.0f64; SEGMENT_LEN];
    let mut im = vec![0.0f64; SEGMENT_LEN];
    for seg in 0..n_segments {
        let start = seg * SEGMENT_STEP;
        let segment = &x[start..start + SEGMENT_LEN];
        let mean = segment.iter().sum::<f64>() / SEGMENT_LEN as f64;
        for t in 0..SEGMENT_LEN {
            re[t] = (segment[t] - mean) * window[t];
            im[t] = 0.0;
        }
        fft_in_place(&mut re, &mut im);
        for k in 0..N_BINS {
            let mag2 = re[k] * re[k] + im[k] * im[k];
            // One-sided: double everything except DC and Nyquist.
            let side = if k == 0 || k == SEGMENT_LEN / 2 {
                1.0
            } else {
                2.0
            };
            psd[k] += side * scale * mag2;
        }
    }
    for v in psd.iter_mut() {
        *v /= n_segments as f64;
    }
    psd
}

fn hann_periodic(n: usize) -> Vec<f64> {
    (0..n)
        .map(|t| 0.5 * (1.0 - (std::f64::consts::TAU * t as f64 / n as f64).cos()))
        .collect()
}

/// Iterative radix-2 Cooley-Tukey FFT; length must be a power of two.
fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two());
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -std::f64::consts::TAU / len as f64;
        let (w_re, w_im) = (ang.cos(), ang.sin());
        for start in (0..n).step_by(len) {
            let mut cur_re = 1.0;
            let mut cur_im = 0.0;
            for k in 0..len / 2 {
                let (a_re, a_im) = (re[start + k], im[start + k]);
                let (b_re, b_im) = (re[start + k + len / 2], im[start + k + len / 2]);
                let t_re = b_re * cur_re - b_im * cur_im;
                let t_im = b_re * cur_im + b_im * cur_re;
                re[start + k] = a_re + t_re;
                im[start + k] = a_im + t_im;
                re[start + k + len / 2] = a_re - t_re;
                im[start + k + len / 2] = a_im - t_im;
                let next_re = cur_re * w_re - cur_im * w_im;
                cur_im = cur_re * w_im + cur_im * w_re;
                cur_re = next_re;
            }
        }
        len <<= 1;
    }
}
