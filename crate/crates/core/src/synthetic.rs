//! Seeded synthetic data for self-tests and benchmarks: feature-level
//! databases with class-dependent theta/alpha power shifts, and raw
//! sinusoid-plus-noise recordings for exercising the preprocessing pipeline.

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::types::{
    DatabaseId, EpochFeatures, Phase, RawRecording, BAND_POINTS, CANONICAL_CHANNELS, NUM_CHANNELS,
};

/// Generate a synthetic feature database. Loaded epochs shift theta power up
/// and alpha power down by `class_shift`; `db_offset` adds a
/// database-dependent nuisance level to every feature, and each participant
/// carries a small random offset of their own.
pub fn synthetic_database(
    db: DatabaseId,
    participants: usize,
    seed: u64,
    class_shift: f64,
    db_offset: f64,
) -> Vec<EpochFeatures> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(participants * 10);
    for p in 0..participants {
        let individual: f64 = rng.gen_range(-0.1..0.1);
        for (phase, label) in [("rest", 0u8), ("task", 1u8)] {
            for seg in 0..5u8 {
                let shift = if label == 1 { class_shift } else { 0.0 };
                let base = 1.0 + db_offset + individual;
                let x = Array2::from_shape_fn((BAND_POINTS, NUM_CHANNELS), |_| {
                    (base + shift + rng.gen_range(-0.2..0.2)).max(0.0)
                });
                let y = Array2::from_shape_fn((BAND_POINTS, NUM_CHANNELS), |_| {
                    (base + class_shift - shift + rng.gen_range(-0.2..0.2)).max(0.0)
                });
                out.push(EpochFeatures {
                    x,
                    y,
                    label,
                    participant_id: format!("p{p:02}"),
                    database_id: db,
                    phase: phase.to_string(),
                    segment_index: seg,
                });
            }
        }
    }
    out
}

/// Synthetic raw recording: per-class mixtures of theta and alpha tones plus
/// uniform noise, with the phase layout each database expects.
pub fn synthetic_recording(db: DatabaseId, fs: f64, seed: u64) -> RawRecording {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<Phase> = match db {
        DatabaseId::Nback => vec![
            Phase { name: "pre_resting".into(), start_s: 0.0, end_s: 180.0 },
            Phase { name: "low".into(), start_s: 180.0, end_s: 360.0 },
            Phase { name: "moderate".into(), start_s: 360.0, end_s: 540.0 },
            Phase { name: "high".into(), start_s: 540.0, end_s: 720.0 },
            Phase { name: "post_resting".into(), start_s: 720.0, end_s: 900.0 },
        ],
        DatabaseId::Stew => vec![
            Phase { name: "resting".into(), start_s: 0.0, end_s: 150.0 },
            Phase { name: "task".into(), start_s: 150.0, end_s: 300.0 },
        ],
        DatabaseId::Eegmat => vec![
            Phase { name: "resting".into(), start_s: 0.0, end_s: 180.0 },
            Phase { name: "task".into(), start_s: 180.0, end_s: 240.0 },
            // Trailing buffer so the task window clears the filter transient.
            Phase { name: "post".into(), start_s: 240.0, end_s: 250.0 },
        ],
    };
    let loaded_phase = match db {
        DatabaseId::Nback => "moderate",
        _ => "task",
    };
    let dur = phases.last().unwrap().end_s;
    let n = (dur * fs) as usize;
    let theta_f = 5.0 + rng.gen_range(-0.5..0.5);
    let alpha_f = 10.0 + rng.gen_range(-0.5..0.5);
    let mut samples = Array2::zeros((NUM_CHANNELS, n));
    for ch in 0..NUM_CHANNELS {
        let gain = 1.0 + 0.05 * ch as f64;
        for t in 0..n {
            let time = t as f64 / fs;
            let loaded = phases
                .iter()
                .any(|p| p.name == loaded_phase && time >= p.start_s && time < p.end_s);
            let (theta_amp, alpha_amp) = if loaded { (2.0, 0.7) } else { (0.7, 2.0) };
            let v = theta_amp * (2.0 * std::f64::consts::PI * theta_f * time).sin()
                + alpha_amp * (2.0 * std::f64::consts::PI * alpha_f * time).sin()
                + rng.gen_range(-0.5..0.5);
            samples[[ch, t]] = gain * v;
        }
    }
    RawRecording {
        samples,
        fs,
        channel_labels: CANONICAL_CHANNELS.iter().map(|s| s.to_string()).collect(),
        phases,
    }
}
