use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The ten scalp channels shared by all three databases, in the canonical
/// column order used throughout the feature matrices.
pub const CANONICAL_CHANNELS: [&str; 10] =
    ["F3", "F7", "T7", "P7", "O1", "O2", "P8", "T8", "F8", "F4"];

/// Number of PSD frequency points per band (theta and alpha).
pub const BAND_POINTS: usize = 16;
/// Number of channels in the canonical montage.
pub const NUM_CHANNELS: usize = 10;
/// PSD grid spacing in Hz.
pub const GRID_STEP_HZ: f64 = 0.25;
/// Theta band grid start (16 points: 4.00, 4.25, .., 7.75 Hz).
pub const THETA_START_HZ: f64 = 4.0;
/// Alpha band grid start (16 points: 8.00, 8.25, .., 11.75 Hz).
pub const ALPHA_START_HZ: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatabaseId {
    #[serde(rename = "NBACK")]
    Nback,
    #[serde(rename = "STEW")]
    Stew,
    #[serde(rename = "EEGMAT")]
    Eegmat,
}

impl DatabaseId {
    pub fn as_str(&self) -> &'static str {
        match self {
            DatabaseId::Nback => "NBACK",
            DatabaseId::Stew => "STEW",
            DatabaseId::Eegmat => "EEGMAT",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NBACK" | "N-BACK" => Some(DatabaseId::Nback),
            "STEW" => Some(DatabaseId::Stew),
            "EEGMAT" => Some(DatabaseId::Eegmat),
            _ => None,
        }
    }
}

impl std::fmt::Display for DatabaseId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Binary workload class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WorkloadClass {
    /// Unloaded (resting), label 0.
    Unloaded,
    /// Loaded (task), label 1.
    Loaded,
}

impl WorkloadClass {
    pub fn label(&self) -> u8 {
        match self {
            WorkloadClass::Unloaded => 0,
            WorkloadClass::Loaded => 1,
        }
    }
}

/// One annotated experiment phase inside a recording.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub start_s: f64,
    pub end_s: f64,
}

/// Raw multichannel EEG recording with phase annotations.
#[derive(Debug, Clone)]
pub struct RawRecording {
    /// channels x time, microvolts.
    pub samples: Array2<f64>,
    /// Sampling rate in Hz.
    pub fs: f64,
    pub channel_labels: Vec<String>,
    pub phases: Vec<Phase>,
}

impl RawRecording {
    pub fn validate(&self) -> Result<()> {
        if self.fs <= 0.0 {
            return Err(Error::DataFormat {
                file: String::new(),
                message: format!("sampling rate must be positive, got {}", self.fs),
            });
        }
        if self.channel_labels.len() != self.samples.nrows() {
            return Err(Error::ChannelCount {
                expected: self.samples.nrows(),
                actual: self.channel_labels.len(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for l in &self.channel_labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::DataFormat {
                    file: String::new(),
                    message: format!("duplicate channel label '{l}'"),
                });
            }
        }
        let dur = self.samples.ncols() as f64 / self.fs;
        for p in &self.phases {
            if p.start_s < 0.0 || p.end_s > dur + 1e-9 || p.start_s >= p.end_s {
                return Err(Error::DataFormat {
                    file: String::new(),
                    message: format!(
                        "phase '{}' window [{}, {}] outside recorded duration {dur:.2} s",
                        p.name, p.start_s, p.end_s
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn phase(&self, name: &str) -> Option<&Phase> {
        self.phases.iter().find(|p| p.name == name)
    }
}

/// One-sided PSD estimate on a uniform frequency grid.
#[derive(Debug, Clone)]
pub struct PsdVector {
    /// Power density per Hz, non-negative.
    pub values: Vec<f64>,
    /// Grid spacing in Hz (frequency of bin k is `k * freq_step`).
    pub freq_step: f64,
}

impl PsdVector {
    pub fn freq(&self, bin: usize) -> f64 {
        bin as f64 * self.freq_step
    }

    /// Index of the bin at frequency `f` (must be on-grid).
    pub fn bin_at(&self, f: f64) -> usize {
        (f / self.freq_step).round() as usize
    }
}

/// Paired theta/alpha PSD feature matrices for one 20-s epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochFeatures {
    /// Theta PSD, 16 frequency points x 10 channels.
    pub x: Array2<f64>,
    /// Alpha PSD, 16 frequency points x 10 channels.
    pub y: Array2<f64>,
    /// 0 = unloaded, 1 = loaded.
    pub label: u8,
    pub participant_id: String,
    pub database_id: DatabaseId,
    pub phase: String,
    /// Temporal order within the 60-s phase window, 0..=4.
    pub segment_index: u8,
}

impl EpochFeatures {
    pub fn validate(&self) -> Result<()> {
        let want = (BAND_POINTS, NUM_CHANNELS);
        if self.x.dim() != want || self.y.dim() != want {
            return Err(Error::ShapeMismatch {
                expected: format!("{want:?}"),
                actual: format!("X {:?}, Y {:?}", self.x.dim(), self.y.dim()),
            });
        }
        if self.x.iter().chain(self.y.iter()).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NonFinite("epoch features".into()));
        }
        Ok(())
    }
}
