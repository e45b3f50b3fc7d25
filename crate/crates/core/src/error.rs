use thiserror::Error;

/// Errors produced by the preprocessing, model, and evaluation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("no valid reference sample")]
    NoValidReference,

    #[error("invalid filter spec: {0}")]
    InvalidFilter(String),

    #[error("signal shorter than filter ({signal} < {taps})")]
    SignalTooShort { signal: usize, taps: usize },

    #[error("resampling ratio {fs_in}/{fs_out} is not rational")]
    IrrationalRatio { fs_in: f64, fs_out: f64 },

    #[error("phase '{phase}' missing or too short in recording")]
    PhaseUnavailable { phase: String },

    #[error("expected a {expected_s} s slice, got {actual_s} s")]
    WrongDuration { expected_s: f64, actual_s: f64 },

    #[error("segment shorter than Welch sub-window ({len} < {win})")]
    SegmentTooShort { len: usize, win: usize },

    #[error("expected {expected} channels, got {actual}")]
    ChannelCount { expected: usize, actual: usize },

    #[error("kernel size must be odd, got {0}")]
    EvenKernel(usize),

    #[error("stride must be >= 1")]
    BadStride,

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("regularization C must be > 0, got {0}")]
    BadRegularization(f64),

    #[error("linear solve failed; the regularized system should be positive-definite, check input data")]
    SolveFailed,

    #[error("unknown case id {0} (expected 1..=6)")]
    UnknownCase(u8),

    #[error("participant {participant} phase {phase}: expected 5 epochs, found {found}")]
    EpochCountMismatch {
        participant: String,
        phase: String,
        found: usize,
    },

    #[error("{file}: {message}")]
    DataFormat { file: String, message: String },

    #[error("stale feature file {file}: parameter hash {found} does not match current {expected} (use --force to override)")]
    StaleFeatures {
        file: String,
        found: String,
        expected: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
