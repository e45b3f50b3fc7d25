use ndarray::{s, Array2};

use crate::error::{Error, Result};
use crate::signal::welch::{welch_psd, WelchConfig};
use crate::types::{
    DatabaseId, EpochFeatures, RawRecording, WorkloadClass, ALPHA_START_HZ, BAND_POINTS,
    GRID_STEP_HZ, NUM_CHANNELS, THETA_START_HZ,
};

/// Phase window length used for class assignment, in seconds.
pub const WINDOW_S: f64 = 60.0;
/// Epoch window length in seconds.
pub const EPOCH_S: f64 = 20.0;
/// Epoch stride in seconds.
pub const STRIDE_S: f64 = 10.0;
/// Epochs per 60-s window: (60 - 20) / 10 + 1.
pub const EPOCHS_PER_WINDOW: usize = 5;

/// The (phase name, offset within phase) that provides the 60-s class window
/// for each database, following the class-assignment table.
pub fn class_window(db: DatabaseId, class: WorkloadClass) -> (&'static str, f64) {
    match (db, class) {
        (DatabaseId::Nback, WorkloadClass::Unloaded) => ("post_resting", 60.0),
        (DatabaseId::Nback, WorkloadClass::Loaded) => ("moderate", 60.0),
        (DatabaseId::Stew, WorkloadClass::Unloaded) => ("resting", 45.0),
        (DatabaseId::Stew, WorkloadClass::Loaded) => ("task", 45.0),
        (DatabaseId::Eegmat, WorkloadClass::Unloaded) => ("resting", 60.0),
        (DatabaseId::Eegmat, WorkloadClass::Loaded) => ("task", 0.0),
    }
}

/// Extract the configured 60-s class window from a (preprocessed) recording.
/// Returns a channels x samples slice.
pub fn select_phase_window(
    rec: &RawRecording,
    db: DatabaseId,
    class: WorkloadClass,
) -> Result<Array2<f64>> {
    let (phase_name, offset_s) = class_window(db, class);
    let phase = rec.phase(phase_name).ok_or_else(|| Error::PhaseUnavailable {
        phase: phase_name.to_string(),
    })?;
    let start_s = phase.start_s + offset_s;
    let end_s = start_s + WINDOW_S;
    if end_s > phase.end_s + 1e-9 {
        return Err(Error::PhaseUnavailable {
            phase: phase_name.to_string(),
        });
    }
    let start = (start_s * rec.fs).round() as usize;
    let len = (WINDOW_S * rec.fs).round() as usize;
    if start + len > rec.samples.ncols() {
        return Err(Error::PhaseUnavailable {
            phase: phase_name.to_string(),
        });
    }
    Ok(rec.samples.slice(s![.., start..start + len]).to_owned())
}

/// Split a 60-s multichannel slice into five 20-s segments with 10-s stride.
pub fn segment(slice: &Array2<f64>, fs: f64) -> Result<Vec<Array2<f64>>> {
    let expected = (WINDOW_S * fs).round() as usize;
    if slice.ncols() != expected {
        return Err(Error::WrongDuration {
            expected_s: WINDOW_S,
            actual_s: slice.ncols() as f64 / fs,
        });
    }
    let win = (EPOCH_S * fs).round() as usize;
    let hop = (STRIDE_S * fs).round() as usize;
    let n = (slice.ncols() - win) / hop + 1;
    debug_assert_eq!(n, EPOCHS_PER_WINDOW);
    Ok((0..n)
        .map(|i| slice.slice(s![.., i * hop..i * hop + win]).to_owned())
        .collect())
}

/// Metadata attached to an epoch during extraction.
#[derive(Debug, Clone)]
pub struct EpochMeta {
    pub label: u8,
    pub participant_id: String,
    pub database_id: DatabaseId,
    pub phase: String,
    pub segment_index: u8,
}

/// Compute the paired theta/alpha PSD matrices for one 20-s segment.
///
/// Column j of X and Y is channel j in the canonical order; X rows are the
/// theta grid 4.00..7.75 Hz and Y rows the alpha grid 8.00..11.75 Hz.
pub fn extract_epoch_features(
    seg: &Array2<f64>,
    fs: f64,
    welch: &WelchConfig,
    meta: EpochMeta,
) -> Result<EpochFeatures> {
    if seg.nrows() != NUM_CHANNELS {
        return Err(Error::ChannelCount {
            expected: NUM_CHANNELS,
            actual: seg.nrows(),
        });
    }
    let mut x = Array2::zeros((BAND_POINTS, NUM_CHANNELS));
    let mut y = Array2::zeros((BAND_POINTS, NUM_CHANNELS));
    for ch in 0..NUM_CHANNELS {
        let channel: Vec<f64> = seg.row(ch).to_vec();
        let psd = welch_psd(&channel, fs, welch)?;
        if (psd.freq_step - GRID_STEP_HZ).abs() > 1e-12 {
            return Err(Error::ShapeMismatch {
                expected: format!("{GRID_STEP_HZ} Hz grid"),
                actual: format!("{} Hz grid", psd.freq_step),
            });
        }
        for i in 0..BAND_POINTS {
            x[[i, ch]] = psd.values[psd.bin_at(THETA_START_HZ + i as f64 * GRID_STEP_HZ)];
            y[[i, ch]] = psd.values[psd.bin_at(ALPHA_START_HZ + i as f64 * GRID_STEP_HZ)];
        }
    }
    let ep = EpochFeatures {
        x,
        y,
        label: meta.label,
        participant_id: meta.participant_id,
        database_id: meta.database_id,
        phase: meta.phase,
        segment_index: meta.segment_index,
    };
    ep.validate()?;
    Ok(ep)
}
