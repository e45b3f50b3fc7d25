//! EEG cognitive-workload recognition built on sliding cross-vector
//! convolution (SCVC).
//!
//! The pipeline runs raw multi-channel EEG through outlier repair, band-pass
//! filtering, resampling, and Welch spectral estimation to produce per-epoch
//! theta/alpha power grids; an interacting-frequency-pair feature extractor
//! (a bank of randomly initialized SCVC kernels) maps those grids to a fixed
//! feature vector; and a ridge-regularized linear readout trained in closed
//! form makes the binary loaded/unloaded decision. [`eval`] implements the
//! cross-database evaluation protocol, hyperparameter tuning, seed sweeps,
//! and diagnostics maps; [`io`] defines the on-disk formats.

pub mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod scvc;
pub mod signal;
pub mod synthetic;
pub mod types;

pub use error::{Error, Result};
pub use eval::{
    build_case, case_spec, evaluate, run_case, seed_sweep, split_validation, tune_hyperparams,
    CaseSpec, EvalReport, TuningGrid, CASES,
};
pub use model::{init_kernel_bank, predict, train, RidgeModel, TrainConfig};
pub use scvc::{forward, ifpfi, scvc, CrossTerm, KernelBank};
pub use signal::{extract_recording_epochs, preprocess_recording, PreprocessConfig};
pub use types::{DatabaseId, EpochFeatures, Phase, RawRecording, WorkloadClass};
