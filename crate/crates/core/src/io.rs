//! On-disk formats: raw recording directories, feature files, kernel-bank
//! and model serialization, reports, and diagnostic map CSVs. All writes go
//! through a temp-file-then-rename so concurrent runs never interleave.

use std::fs;
use std::io::Read as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::model::RidgeModel;
use crate::scvc::KernelBank;
use crate::signal::PreprocessConfig;
use crate::types::{DatabaseId, EpochFeatures, Phase, RawRecording, CANONICAL_CHANNELS};

pub const FEATURE_SCHEMA_VERSION: u32 = 1;

/// Sidecar metadata for a raw recording directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub fs: f64,
    pub channel_labels: Vec<String>,
    pub phases: Vec<Phase>,
}

fn data_err(file: &Path, message: impl Into<String>) -> Error {
    Error::DataFormat {
        file: file.display().to_string(),
        message: message.into(),
    }
}

/// Load a recording from a directory holding `meta.json` plus either
/// `signal.f32le` (row-major channels x time, little-endian f32) or
/// `signal.csv` (one column per channel, header row of labels).
pub fn load_recording(dir: &Path) -> Result<RawRecording> {
    let meta_path = dir.join("meta.json");
    let meta_text = fs::read_to_string(&meta_path)
        .map_err(|e| data_err(&meta_path, format!("cannot read: {e}")))?;
    let meta: RecordingMeta = serde_json::from_str(&meta_text)
        .map_err(|e| data_err(&meta_path, format!("invalid meta.json: {e}")))?;
    let bin = dir.join("signal.f32le");
    let csv_path = dir.join("signal.csv");
    let samples = if bin.exists() {
        read_f32le(&bin, meta.channel_labels.len())?
    } else if csv_path.exists() {
        read_signal_csv(&csv_path, &meta.channel_labels)?
    } else {
        return Err(data_err(dir, "neither signal.f32le nor signal.csv present"));
    };
    let rec = RawRecording {
        samples,
        fs: meta.fs,
        channel_labels: meta.channel_labels,
        phases: meta.phases,
    };
    rec.validate().map_err(|e| match e {
        Error::DataFormat { message, .. } => data_err(dir, message),
        other => other,
    })?;
    Ok(rec)
}

fn read_f32le(path: &Path, channels: usize) -> Result<Array2<f64>> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .map_err(|e| data_err(path, format!("cannot open: {e}")))?
        .read_to_end(&mut bytes)?;
    if channels == 0 || bytes.len() % 4 != 0 {
        return Err(data_err(path, "byte length is not a multiple of 4"));
    }
    let total = bytes.len() / 4;
    if total % channels != 0 {
        return Err(data_err(
            path,
            format!("{total} samples do not divide into {channels} channels"),
        ));
    }
    let time = total / channels;
    let mut out = Array2::zeros((channels, time));
    for (i, chunk) in bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
        out[[i / time, i % time]] = v;
    }
    Ok(out)
}

fn read_signal_csv(path: &Path, labels: &[String]) -> Result<Array2<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
    if headers != labels {
        return Err(data_err(
            path,
            format!("CSV header {headers:?} does not match meta channel labels"),
        ));
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); labels.len()];
    for record in rdr.records() {
        let record = record?;
        if record.len() != labels.len() {
            return Err(data_err(path, "row width does not match header"));
        }
        for (i, field) in record.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|e| data_err(path, format!("bad value '{field}': {e}")))?;
            columns[i].push(v);
        }
    }
    let time = columns[0].len();
    let mut out = Array2::zeros((labels.len(), time));
    for (ch, col) in columns.iter().enumerate() {
        for (t, v) in col.iter().enumerate() {
            out[[ch, t]] = *v;
        }
    }
    Ok(out)
}

/// Write bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        path.file_name().unwrap().to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Hash of the preprocessing parameters, embedded in feature files so stale
/// features are detected.
pub fn preprocess_hash(cfg: &PreprocessConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureFile {
    pub schema_version: u32,
    pub database_id: DatabaseId,
    pub params_hash: String,
    pub epochs: Vec<EpochFeatures>,
}

pub fn write_features(
    path: &Path,
    db: DatabaseId,
    epochs: &[EpochFeatures],
    cfg: &PreprocessConfig,
) -> Result<()> {
    let file = FeatureFile {
        schema_version: FEATURE_SCHEMA_VERSION,
        database_id: db,
        params_hash: preprocess_hash(cfg),
        epochs: epochs.to_vec(),
    };
    write_atomic(path, serde_json::to_string_pretty(&file)?.as_bytes())
}

/// Load a feature file, refusing stale parameter hashes unless `force`.
pub fn read_features(
    path: &Path,
    cfg: Option<&PreprocessConfig>,
    force: bool,
) -> Result<FeatureFile> {
    let text =
        fs::read_to_string(path).map_err(|e| data_err(path, format!("cannot read: {e}")))?;
    let file: FeatureFile = serde_json::from_str(&text)
        .map_err(|e| data_err(path, format!("invalid feature file: {e}")))?;
    if file.schema_version != FEATURE_SCHEMA_VERSION {
        return Err(data_err(
            path,
            format!("unsupported schema_version {}", file.schema_version),
        ));
    }
    if let Some(cfg) = cfg {
        let expected = preprocess_hash(cfg);
        if !force && file.params_hash != expected {
            return Err(Error::StaleFeatures {
                file: path.display().to_string(),
                found: file.params_hash.clone(),
                expected,
            });
        }
    }
    for e in &file.epochs {
        e.validate()?;
    }
    Ok(file)
}

/// Serialized kernel bank; weights are optional because the bank is fully
/// reproducible from (shape, seed, init_bound).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BankFile {
    /// (c, p, q, d).
    pub shape: (usize, usize, usize, usize),
    pub seed: u64,
    pub init_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub biases: Option<Vec<f64>>,
}

pub fn write_bank(path: &Path, bank: &KernelBank, include_weights: bool) -> Result<()> {
    let file = BankFile {
        shape: bank.shape(),
        seed: bank.seed,
        init_bound: bank.init_bound,
        weights: include_weights.then(|| bank.weights.iter().cloned().collect()),
        biases: include_weights.then(|| bank.biases.to_vec()),
    };
    write_atomic(path, serde_json::to_string(&file)?.as_bytes())
}

pub fn read_bank(path: &Path) -> Result<KernelBank> {
    let text =
        fs::read_to_string(path).map_err(|e| data_err(path, format!("cannot read: {e}")))?;
    let file: BankFile = serde_json::from_str(&text)
        .map_err(|e| data_err(path, format!("invalid bank file: {e}")))?;
    let (c, p, q, d) = file.shape;
    let bank = match (file.weights, file.biases) {
        (Some(w), Some(b)) => KernelBank {
            weights: ndarray::Array5::from_shape_vec((c, p, q, d, d), w)
                .map_err(|e| data_err(path, format!("weight shape mismatch: {e}")))?,
            biases: ndarray::Array1::from_vec(b),
            seed: file.seed,
            init_bound: file.init_bound,
        },
        _ => {
            // Regenerate from provenance.
            let cfg = crate::model::TrainConfig {
                channels: c,
                kernel_size: d,
                regularization: 1.0,
                seed: file.seed,
                stride: 1,
                cross_term: crate::scvc::CrossTerm::Squared,
                init_bound: Some(file.init_bound),
            };
            crate::model::init_kernel_bank(&cfg, p, q)
        }
    };
    Ok(bank)
}

pub fn write_model(path: &Path, model: &RidgeModel) -> Result<()> {
    write_atomic(path, serde_json::to_string_pretty(model)?.as_bytes())
}

pub fn read_model(path: &Path) -> Result<RidgeModel> {
    let text =
        fs::read_to_string(path).map_err(|e| data_err(path, format!("cannot read: {e}")))?;
    serde_json::from_str(&text).map_err(|e| data_err(path, format!("invalid model file: {e}")))
}

pub fn report_path(dir: &Path, case_id: u8, paradigm: u8) -> PathBuf {
    dir.join(format!("report_case{case_id}_p{paradigm}.json"))
}

pub fn write_report(dir: &Path, report: &EvalReport) -> Result<PathBuf> {
    let path = report_path(dir, report.case_id, report.paradigm);
    write_atomic(&path, serde_json::to_string_pretty(report)?.as_bytes())?;
    Ok(path)
}

/// Append one row per report to `summary.csv`, creating the header if the
/// file does not exist yet.
pub fn append_summary(dir: &Path, reports: &[&EvalReport]) -> Result<PathBuf> {
    let path = dir.join("summary.csv");
    let mut body = if path.exists() {
        fs::read_to_string(&path)?
    } else {
        "case,paradigm,mean_acc,mean_f1,seed,c,C\n".to_string()
    };
    for r in reports {
        body.push_str(&format!(
            "{},{},{:.6},{:.6},{},{},{:e}\n",
            r.case_id, r.paradigm, r.mean_acc, r.mean_f1, r.seed, r.config.channels,
            r.config.regularization
        ));
    }
    write_atomic(&path, body.as_bytes())?;
    Ok(path)
}

/// Write a diagnostics map as CSV with header rows naming the axes.
pub fn write_map_csv(
    path: &Path,
    map: &Array2<f64>,
    row_labels: &[String],
    col_labels: &[String],
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!(",{}\n", col_labels.join(",")));
    for (i, row) in map.outer_iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
        out.push_str(&format!("{},{}\n", row_labels[i], cells.join(",")));
    }
    write_atomic(path, out.as_bytes())
}

/// Frequency labels for the theta (rows) and alpha (columns) map axes.
pub fn band_freq_labels(start_hz: f64) -> Vec<String> {
    (0..crate::types::BAND_POINTS)
        .map(|i| format!("{:.2}", start_hz + i as f64 * crate::types::GRID_STEP_HZ))
        .collect()
}

pub fn channel_labels() -> Vec<String> {
    CANONICAL_CHANNELS.iter().map(|s| s.to_string()).collect()
}
