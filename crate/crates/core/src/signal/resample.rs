use crate::error::{Error, Result};
use crate::signal::fir::hamming_symmetric;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Polyphase rational resampling from `fs_in` to `fs_out` (e.g. up 32 / down
/// 125 for 500 -> 128 Hz), with a Hamming-windowed anti-alias lowpass at
/// min(fs_in, fs_out)/2 and group-delay compensation.
pub fn resample(signal: &[f64], fs_in: f64, fs_out: f64) -> Result<Vec<f64>> {
    if signal.is_empty() {
        return Err(Error::EmptyInput);
    }
    if (fs_in - fs_out).abs() < 1e-12 {
        return Ok(signal.to_vec());
    }
    if fs_in <= 0.0 || fs_out <= 0.0 || fs_in.fract() != 0.0 || fs_out.fract() != 0.0 {
        return Err(Error::IrrationalRatio { fs_in, fs_out });
    }
    let g = gcd(fs_in as u64, fs_out as u64);
    let up = (fs_out as u64 / g) as usize; // L
    let down = (fs_in as u64 / g) as usize; // M

    // Lowpass at the tighter Nyquist, designed at the upsampled rate.
    let max_rate = up.max(down);
    let cutoff = 0.5 / max_rate as f64; // cycles per upsampled sample
    let half = 10 * max_rate;
    let taps = 2 * half + 1;
    let win = hamming_symmetric(taps);
    let mut h: Vec<f64> = (0..taps)
        .map(|k| {
            let m = k as f64 - half as f64;
            2.0 * cutoff * sinc(2.0 * cutoff * m) * win[k]
        })
        .collect();
    // Unity passband gain after zero-stuffing by `up`.
    let dc: f64 = h.iter().sum();
    let scale = up as f64 / dc;
    for v in h.iter_mut() {
        *v *= scale;
    }

    let n_in = signal.len();
    let n_out = (n_in * up).div_ceil(down);
    let mut out = vec![0.0; n_out];
    for (n, o) in out.iter_mut().enumerate() {
        // Output sample n sits at upsampled index n*down; the filter is
        // centered there via the `half` offset. Only stuffed indices that are
        // multiples of `up` carry input samples.
        let center = n * down + half;
        let j_hi = center; // k = center - j, k in [0, taps)
        let j_lo = center.saturating_sub(taps - 1);
        let mut j = j_lo.div_ceil(up) * up;
        let mut acc = 0.0;
        while j <= j_hi {
            let i = j / up;
            if i >= n_in {
                break;
            }
            acc += h[center - j] * signal[i];
            j += up;
        }
        *o = acc;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_ratio_500_to_128() {
        let sig = vec![0.0; 5000];
        let out = resample(&sig, 500.0, 128.0).unwrap();
        assert_eq!(out.len(), 1280);
    }

    #[test]
    fn identity_when_rates_equal() {
        let sig: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(resample(&sig, 128.0, 128.0).unwrap(), sig);
    }

    #[test]
    fn irrational_ratio_errors() {
        assert!(matches!(
            resample(&[0.0; 10], 500.5, 128.0),
            Err(Error::IrrationalRatio { .. })
        ));
    }

    #[test]
    fn sinusoid_amplitude_preserved() {
        // 6 Hz tone, 500 -> 128 Hz; fit amplitude on the interior.
        let fs_in = 500.0;
        let n = 10_000;
        let f = 6.0;
        let sig: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / fs_in).sin())
            .collect();
        let out = resample(&sig, fs_in, 128.0).unwrap();
        // Least-squares fit of a*sin + b*cos at 6 Hz on the resampled grid.
        let fs_out = 128.0;
        let interior = 200..out.len() - 200;
        let (mut ss, mut sc, mut cs, mut sy, mut cy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in interior {
            let t = i as f64 / fs_out;
            let s = (2.0 * std::f64::consts::PI * f * t).sin();
            let c = (2.0 * std::f64::consts::PI * f * t).cos();
            ss += s * s;
            sc += s * c;
            cs += c * c;
            sy += s * out[i];
            cy += c * out[i];
        }
        let det = ss * cs - sc * sc;
        let a = (cs * sy - sc * cy) / det;
        let b = (ss * cy - sc * sy) / det;
        let amp = (a * a + b * b).sqrt();
        assert!((amp - 1.0).abs() < 0.02, "fitted amplitude = {amp}");
    }
}
