//! Raw EEG to paired theta/alpha PSD feature matrices.
//!
//! Pipeline per channel: spike repair on first differences, 3.5-31 Hz
//! Hamming-windowed FIR bandpass with group-delay compensation, rational
//! resampling to 128 Hz, 60-s class-window selection, 20-s/10-s segmentation,
//! and Welch PSD extraction on the 0.25 Hz grid.

pub mod epoch;
pub mod fir;
pub mod outlier;
pub mod resample;
pub mod welch;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::epoch::{extract_epoch_features, segment, select_phase_window, EpochMeta};
use crate::signal::fir::{apply_filter, design_bandpass, FilterSpec};
use crate::signal::outlier::{repair_outliers, OutlierPolicy};
use crate::signal::resample::resample;
use crate::signal::welch::WelchConfig;
use crate::types::{DatabaseId, EpochFeatures, RawRecording, WorkloadClass, CANONICAL_CHANNELS};

/// Parameters of the preprocessing pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub outlier: OutlierPolicy,
    pub filter: FilterSpec,
    pub welch: WelchConfig,
    /// Common sampling rate after resampling.
    pub target_fs: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            outlier: OutlierPolicy::default(),
            filter: FilterSpec::workload_default(),
            welch: WelchConfig::default(),
            target_fs: 128.0,
        }
    }
}

/// Map the recording's channels onto the canonical ten-channel montage.
fn canonical_rows(rec: &RawRecording) -> Result<Vec<usize>> {
    CANONICAL_CHANNELS
        .iter()
        .map(|want| {
            rec.channel_labels
                .iter()
                .position(|l| l.eq_ignore_ascii_case(want))
                .ok_or_else(|| Error::DataFormat {
                    file: String::new(),
                    message: format!("channel '{want}' not present in recording"),
                })
        })
        .collect()
}

/// Run outlier repair, bandpass filtering, and resampling on the canonical
/// channels, returning a recording at `target_fs` with phases carried over.
pub fn preprocess_recording(rec: &RawRecording, cfg: &PreprocessConfig) -> Result<RawRecording> {
    rec.validate()?;
    let rows = canonical_rows(rec)?;
    let coeffs = design_bandpass(&cfg.filter, rec.fs)?;
    let mut channels: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    for &r in &rows {
        let raw: Vec<f64> = rec.samples.row(r).to_vec();
        let repaired = repair_outliers(&raw, &cfg.outlier)?;
        let filtered = apply_filter(&repaired, &coeffs)?;
        let resampled = resample(&filtered, rec.fs, cfg.target_fs)?;
        channels.push(resampled);
    }
    let n = channels.iter().map(Vec::len).min().unwrap_or(0);
    let mut samples = Array2::zeros((channels.len(), n));
    for (i, ch) in channels.iter().enumerate() {
        for t in 0..n {
            samples[[i, t]] = ch[t];
        }
    }
    Ok(RawRecording {
        samples,
        fs: cfg.target_fs,
        channel_labels: CANONICAL_CHANNELS.iter().map(|s| s.to_string()).collect(),
        phases: rec.phases.clone(),
    })
}

/// Duration in seconds contaminated by the filter transient at each end.
pub fn edge_trim_s(cfg: &PreprocessConfig, fs_original: f64) -> f64 {
    ((cfg.filter.taps - 1) / 2) as f64 / fs_original
}

/// Full pipeline for one recording: preprocessing plus extraction of the ten
/// epochs (5 unloaded + 5 loaded) prescribed by the class-assignment table.
pub fn extract_recording_epochs(
    rec: &RawRecording,
    db: DatabaseId,
    participant_id: &str,
    cfg: &PreprocessConfig,
) -> Result<Vec<EpochFeatures>> {
    let processed = preprocess_recording(rec, cfg)?;
    let trim_s = edge_trim_s(cfg, rec.fs);
    let total_s = processed.samples.ncols() as f64 / processed.fs;
    let mut out = Vec::with_capacity(2 * epoch::EPOCHS_PER_WINDOW);
    for class in [WorkloadClass::Unloaded, WorkloadClass::Loaded] {
        let (phase_name, offset_s) = epoch::class_window(db, class);
        // Filter transients sit at the recording edges; the class windows
        // must be interior to them.
        if let Some(p) = processed.phase(phase_name) {
            let start = p.start_s + offset_s;
            if start < trim_s - 1e-9 || start + epoch::WINDOW_S > total_s - trim_s + 1e-9 {
                return Err(Error::PhaseUnavailable {
                    phase: phase_name.to_string(),
                });
            }
        }
        let window = select_phase_window(&processed, db, class)?;
        let segments = segment(&window, processed.fs)?;
        for (idx, seg) in segments.iter().enumerate() {
            out.push(extract_epoch_features(
                seg,
                processed.fs,
                &cfg.welch,
                EpochMeta {
                    label: class.label(),
                    participant_id: participant_id.to_string(),
                    database_id: db,
                    phase: phase_name.to_string(),
                    segment_index: idx as u8,
                },
            )?);
        }
    }
    Ok(out)
}
