use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear-phase bandpass filter specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub low_cut_hz: f64,
    pub high_cut_hz: f64,
    /// Odd tap count (linear phase, integral group delay).
    pub taps: usize,
}

impl FilterSpec {
    /// Passband 3.5-31 Hz, 429 taps (~1 Hz Hamming transition at 128 Hz).
    pub fn workload_default() -> Self {
        FilterSpec {
            low_cut_hz: 3.5,
            high_cut_hz: 31.0,
            taps: 429,
        }
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(0.0 < self.low_cut_hz && self.low_cut_hz < self.high_cut_hz && self.high_cut_hz < fs / 2.0) {
            return Err(Error::InvalidFilter(format!(
                "cutoffs must satisfy 0 < {} < {} < fs/2 = {}",
                self.low_cut_hz,
                self.high_cut_hz,
                fs / 2.0
            )));
        }
        if self.taps % 2 == 0 || self.taps < 3 {
            return Err(Error::InvalidFilter(format!(
                "taps must be an odd integer >= 3, got {}",
                self.taps
            )));
        }
        Ok(())
    }
}

/// Symmetric Hamming window of length `n`.
pub(crate) fn hamming_symmetric(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Windowed-sinc bandpass design (difference of two Hamming-windowed
/// lowpasses), scaled to unit gain at the band center.
pub fn design_bandpass(spec: &FilterSpec, fs: f64) -> Result<Vec<f64>> {
    spec.validate(fs)?;
    let taps = spec.taps;
    let mid = (taps - 1) as f64 / 2.0;
    let f1 = spec.low_cut_hz / fs; // cycles per sample
    let f2 = spec.high_cut_hz / fs;
    let win = hamming_symmetric(taps);
    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let m = i as f64 - mid;
            (2.0 * f2 * sinc(2.0 * f2 * m) - 2.0 * f1 * sinc(2.0 * f1 * m)) * win[i]
        })
        .collect();
    // Normalize magnitude response to 1 at the band center.
    let fc = 0.5 * (f1 + f2);
    let gain = frequency_response(&h, fc);
    for v in h.iter_mut() {
        *v /= gain;
    }
    Ok(h)
}

/// |H(f)| of a linear-phase FIR at normalized frequency `f` (cycles/sample),
/// evaluated by direct DFT of the coefficients.
pub fn frequency_response(coeffs: &[f64], f: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * f;
    let (mut re, mut im) = (0.0, 0.0);
    for (i, c) in coeffs.iter().enumerate() {
        re += c * (w * i as f64).cos();
        im -= c * (w * i as f64).sin();
    }
    (re * re + im * im).sqrt()
}

/// Convolve `signal` with `coeffs`, compensating the (taps-1)/2 group delay
/// so the output stays aligned with the input. Output length equals input
/// length; the (taps-1)/2 samples at each end carry filter transients and
/// must be trimmed by the caller before segmentation.
pub fn apply_filter(signal: &[f64], coeffs: &[f64]) -> Result<Vec<f64>> {
    let taps = coeffs.len();
    if signal.len() <= taps {
        return Err(Error::SignalTooShort {
            signal: signal.len(),
            taps,
        });
    }
    let delay = (taps - 1) / 2;
    let n = signal.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        // y[i] = sum_k h[k] * x[i + delay - k], zero outside the signal.
        let center = i + delay;
        let k_lo = center.saturating_sub(n - 1);
        let k_hi = taps.min(center + 1);
        for k in k_lo..k_hi {
            acc += coeffs[k] * signal[center - k];
        }
        out[i] = acc;
    }
    Ok(out)
}
