use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::adam::AdamConfig;
use super::schedule::learning_rate;
use crate::error::{Error, Result};
use crate::losses::{FeatureSource, LossPreset};
use crate::models::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelPreset {
    Full,
    Tiny,
}

impl ModelPreset {
    pub fn config(self) -> ModelConfig {
        match self {
            Self::Full => ModelConfig::full(),
            Self::Tiny => ModelConfig::tiny(),
        }
    }
}

/// Optimization settings. The TOML form uses these field names verbatim; any
/// field may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// LR patch side; HR patches are `scale` times larger.
    pub lr_patch: usize,
    pub total_iters: u64,
    pub base_lr: f64,
    pub lr_milestones: Vec<u64>,
    pub lr_factor: f64,
    pub adam: AdamConfig,
    pub loss_preset: LossPreset,
    pub cyclic_path: bool,
    pub seed: u64,
    pub model: ModelPreset,
    /// Extra checkpoint interval; milestones and the final iteration are always saved.
    pub checkpoint_every: u64,
    pub log_every: u64,
    /// Pretrained perceptual feature weights; the built-in extractor when absent.
    pub perceptual_weights: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            lr_patch: 32,
            total_iters: 51_000,
            base_lr: 1e-4,
            lr_milestones: vec![5_000, 10_000, 20_000, 30_000],
            lr_factor: 0.5,
            adam: AdamConfig::default(),
            loss_preset: LossPreset::Structural,
            cyclic_path: true,
            seed: 0,
            model: ModelPreset::Full,
            checkpoint_every: 5_000,
            log_every: 100,
            perceptual_weights: None,
        }
    }
}

impl TrainConfig {
    /// CPU-sized run: small networks, 200 iterations, batch 4 of 16² LR patches.
    pub fn desk() -> Self {
        Self {
            batch_size: 4,
            lr_patch: 16,
            total_iters: 200,
            model: ModelPreset::Tiny,
            checkpoint_every: 100,
            log_every: 1,
            ..Self::default()
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.batch_size == 0 || self.lr_patch == 0 {
            return bad("batch_size and lr_patch must be positive".into());
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) || !(self.lr_factor > 0.0 && self.lr_factor.is_finite()) {
            return bad(format!("rates must be positive, got base_lr={} lr_factor={}", self.base_lr, self.lr_factor));
        }
        if self.lr_milestones.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("milestones must be strictly increasing: {:?}", self.lr_milestones));
        }
        let a = &self.adam;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || a.eps <= 0.0 {
            return bad(format!("invalid adam settings {a:?}"));
        }
        if self.log_every == 0 {
            return bad("log_every must be positive".into());
        }
        Ok(())
    }

    pub fn lr_at(&self, iteration: u64) -> f64 {
        learning_rate(self.base_lr, &self.lr_milestones, self.lr_factor, iteration)
    }

    pub fn model_config(&self) -> ModelConfig {
        self.model.config()
    }

    pub fn feature_source(&self) -> FeatureSource {
        match &self.perceptual_weights {
            Some(p) => FeatureSource::Pretrained(p.clone()),
            None => FeatureSource::Fallback,
        }
    }

    /// Whether `iteration` (1-based count of completed steps) gets a checkpoint.
    pub fn is_checkpoint_iter(&self, iteration: u64) -> bool {
        iteration == self.total_iters
            || self.lr_milestones.contains(&iteration)
            || (self.checkpoint_every > 0 && iteration % self.checkpoint_every == 0)
    }
}
