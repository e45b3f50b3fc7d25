use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::PsdVector;

/// Welch averaging parameters. The default matches the feature pipeline:
/// 128-sample Hamming sub-windows, 64-sample overlap, zero-padded to a
/// 512-point FFT (0.25 Hz grid at fs = 128).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchConfig {
    pub win_len: usize,
    pub overlap: usize,
    pub nfft: usize,
}

impl Default for WelchConfig {
    fn default() -> Self {
        WelchConfig {
            win_len: 128,
            overlap: 64,
            nfft: 512,
        }
    }
}

impl WelchConfig {
    /// Alternate reading of the pipeline parameters: 512-sample sub-windows
    /// over the 20-s epoch, same 512-point FFT.
    pub fn long_window() -> Self {
        WelchConfig {
            win_len: 512,
            overlap: 256,
            nfft: 512,
        }
    }
}

/// Periodic Hamming window (DFT-even), as used for spectral averaging.
fn hamming_periodic(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// One-sided Welch PSD estimate in power per Hz.
///
/// Each Hamming-windowed sub-window is zero-padded to `nfft` points; the
/// averaged periodogram is scaled by 1/(fs * sum(w^2)) with interior bins
/// doubled, so a unit-variance white input averages to 2/fs per Hz.
pub fn welch_psd(segment: &[f64], fs: f64, cfg: &WelchConfig) -> Result<PsdVector> {
    if segment.len() < cfg.win_len {
        return Err(Error::SegmentTooShort {
            len: segment.len(),
            win: cfg.win_len,
        });
    }
    assert!(cfg.overlap < cfg.win_len, "overlap must be < win_len");
    assert!(cfg.nfft >= cfg.win_len, "nfft must be >= win_len");

    let window = hamming_periodic(cfg.win_len);
    let win_power: f64 = window.iter().map(|w| w * w).sum();
    let hop = cfg.win_len - cfg.overlap;
    let n_windows = (segment.len() - cfg.win_len) / hop + 1;

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(cfg.nfft);
    let n_bins = cfg.nfft / 2 + 1;
    let mut acc = vec![0.0f64; n_bins];
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.nfft];

    for w in 0..n_windows {
        let start = w * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = if i < cfg.win_len {
                Complex::new(segment[start + i] * window[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += buf[k].norm_sqr();
        }
    }

    let scale = 1.0 / (fs * win_power * n_windows as f64);
    let mut values: Vec<f64> = acc.iter().map(|a| a * scale).collect();
    for v in values[1..n_bins - 1].iter_mut() {
        *v *= 2.0; // one-sided: fold negative frequencies
    }
    Ok(PsdVector {
        values,
        freq_step: fs / cfg.nfft as f64,
    })
}
