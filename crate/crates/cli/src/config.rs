//! TOML run configuration. Every hyperparameter of the pipeline is
//! expressible here; command-line flags override file values.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use scvcnet::eval::TuningGrid;
use scvcnet::model::TrainConfig;
use scvcnet::signal::PreprocessConfig;
use scvcnet::types::DatabaseId;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Directory of per-participant recording directories, one per database.
    pub raw_nback: Option<PathBuf>,
    pub raw_stew: Option<PathBuf>,
    pub raw_eegmat: Option<PathBuf>,
    pub features_dir: Option<PathBuf>,
    pub report_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub preprocess: PreprocessConfig,
    pub model: TrainConfig,
    pub tuning: TuningGrid,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            paths: Paths::default(),
            preprocess: PreprocessConfig::default(),
            model: TrainConfig::new(76, 1.5e-10, 42),
            tuning: TuningGrid::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config '{}'", p.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("invalid config '{}'", p.display()))?
            }
            None => RunConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.model.kernel_size % 2 == 0 {
            bail!("model.kernel_size must be odd, got {}", self.model.kernel_size);
        }
        if self.model.channels == 0 {
            bail!("model.channels must be positive");
        }
        if self.model.stride == 0 {
            bail!("model.stride must be positive");
        }
        if !(self.model.regularization.is_finite() && self.model.regularization > 0.0) {
            bail!("model.regularization must be a positive finite number");
        }
        if self.tuning.channels.is_empty() || self.tuning.regularizations.is_empty() {
            bail!("tuning grid must be non-empty");
        }
        Ok(())
    }

    /// Report directory: `SCVC_REPORT_DIR` overrides the config, which
    /// defaults to `reports`.
    pub fn report_dir(&self) -> PathBuf {
        if let Ok(dir) = std::env::var("SCVC_REPORT_DIR") {
            return PathBuf::from(dir);
        }
        self.paths
            .report_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("reports"))
    }

    pub fn features_dir(&self) -> PathBuf {
        self.paths
            .features_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("features"))
    }

    pub fn raw_root(&self, db: DatabaseId) -> Option<&PathBuf> {
        match db {
            DatabaseId::Nback => self.paths.raw_nback.as_ref(),
            DatabaseId::Stew => self.paths.raw_stew.as_ref(),
            DatabaseId::Eegmat => self.paths.raw_eegmat.as_ref(),
        }
    }

    pub fn feature_path(&self, db: DatabaseId) -> PathBuf {
        self.features_dir()
            .join(format!("features_{}.json", db.as_str().to_lowercase()))
    }
}
