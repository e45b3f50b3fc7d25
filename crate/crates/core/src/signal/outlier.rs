use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the spike-rejection threshold on |first difference| is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutlierPolicy {
    /// Threshold = `factor` x median absolute deviation of the first
    /// differences, computed once on the input signal.
    Mad { factor: f64 },
    /// Fixed threshold in signal units.
    Absolute { threshold: f64 },
}

impl Default for OutlierPolicy {
    fn default() -> Self {
        OutlierPolicy::Mad { factor: 6.0 }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn resolve_threshold(signal: &[f64], policy: &OutlierPolicy) -> f64 {
    match *policy {
        OutlierPolicy::Absolute { threshold } => threshold,
        OutlierPolicy::Mad { factor } => {
            let diffs: Vec<f64> = signal.windows(2).map(|w| w[1] - w[0]).collect();
            let m = median(diffs.clone());
            let mad = median(diffs.iter().map(|d| (d - m).abs()).collect());
            factor * mad
        }
    }
}

/// Replace spike samples with the most recent preceding normal value.
///
/// A sample is flagged when the absolute difference to the last accepted
/// value exceeds the threshold; flagged samples are carried forward from the
/// previous accepted value. The first sample is never flagged.
pub fn repair_outliers(signal: &[f64], policy: &OutlierPolicy) -> Result<Vec<f64>> {
    if signal.is_empty() {
        return Err(Error::EmptyInput);
    }
    if signal.iter().all(|v| !v.is_finite()) {
        return Err(Error::NoValidReference);
    }
    if signal.len() < 2 {
        return Ok(signal.to_vec());
    }
    let threshold = resolve_threshold(signal, policy);
    let mut out = Vec::with_capacity(signal.len());
    out.push(signal[0]);
    for i in 1..signal.len() {
        let prev = out[i - 1];
        if (signal[i] - prev).abs() > threshold || !signal[i].is_finite() {
            out.push(prev);
        } else {
            out.push(signal[i]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs(threshold: f64) -> OutlierPolicy {
        OutlierPolicy::Absolute { threshold }
    }

    #[test]
    fn single_spike_carried_forward() {
        let out = repair_outliers(&[0.0, 0.0, 500.0, 0.0, 0.0], &abs(100.0)).unwrap();
        assert_eq!(out, vec![0.0; 5]);
    }

    #[test]
    fn constant_signal_unchanged() {
        let sig = vec![3.25; 64];
        let out = repair_outliers(&sig, &abs(1e-6)).unwrap();
        assert_eq!(out, sig);
        let out = repair_outliers(&sig, &OutlierPolicy::default()).unwrap();
        assert_eq!(out, sig);
    }

    #[test]
    fn empty_input_errors() {
        assert!(matches!(
            repair_outliers(&[], &abs(1.0)),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn all_nan_errors() {
        assert!(matches!(
            repair_outliers(&[f64::NAN, f64::NAN], &abs(1.0)),
            Err(Error::NoValidReference)
        ));
    }

    #[test]
    fn matches_sequential_oracle_on_random_walk() {
        // Literal sample-by-sample oracle for the MAD policy.
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut sig = vec![0.0f64];
        for _ in 0..2000 {
            let step: f64 = rng.gen_range(-1.0..1.0);
            sig.push(sig.last().unwrap() + step);
        }
        // Inject spikes.
        for _ in 0..30 {
            let i = rng.gen_range(1..sig.len());
            sig[i] += if rng.gen_bool(0.5) { 80.0 } else { -80.0 };
        }
        let policy = OutlierPolicy::default();
        let thr = super::resolve_threshold(&sig, &policy);
        let mut expect = vec![sig[0]];
        for i in 1..sig.len() {
            let prev = *expect.last().unwrap();
            if (sig[i] - prev).abs() > thr {
                expect.push(prev);
            } else {
                expect.push(sig[i]);
            }
        }
        let out = repair_outliers(&sig, &policy).unwrap();
        assert_eq!(out, expect);
    }

    #[test]
    fn absolute_policy_idempotent() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let sig: Vec<f64> = (0..500).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let p = abs(5.0);
        let once = repair_outliers(&sig, &p).unwrap();
        let twice = repair_outliers(&once, &p).unwrap();
        assert_eq!(once, twice);
    }
}
