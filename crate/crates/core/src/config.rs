//! Run configuration, read from TOML. Unknown keys are rejected at every
//! level.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::DatagenConfig;
use crate::error::{Error, Result};
use crate::losses::LossWeights;
use crate::metrics::SimConfig;
use crate::model::ModelConfig;
use crate::optim::AdamConfig;
use crate::prior::PriorConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Epochs (0-based) at which the learning rate is multiplied by
    /// `lr_decay`.
    pub lr_milestones: Vec<usize>,
    pub lr_decay: f64,
    /// Object points fed to the encoders per sample; 0 uses the whole cloud.
    pub train_points: usize,
    /// Contact threshold for the contact maps, meters.
    pub tau: f64,
    pub checkpoint_every: usize,
    /// Initialize codebooks from encoder outputs before the first epoch.
    pub data_init_codebooks: bool,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-4,
            lr_milestones: vec![60, 120, 160, 180],
            lr_decay: 0.5,
            train_points: 0,
            tau: crate::losses::CONTACT_THRESHOLD,
            checkpoint_every: 10,
            data_init_codebooks: true,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        let passed = self.lr_milestones.iter().filter(|&&m| epoch >= m).count();
        self.learning_rate * self.lr_decay.powi(passed as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub datagen: DatagenConfig,
    pub model: ModelConfig,
    pub loss: LossWeights,
    pub train: TrainConfig,
    pub prior: PriorConfig,
    pub sim: SimConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.train;
        if t.batch_size == 0 {
            return Err(Error::Config("train.batch_size must be positive".into()));
        }
        if !(t.learning_rate > 0.0) || !(t.lr_decay > 0.0) {
            return Err(Error::Config("learning rate and decay must be positive".into()));
        }
        if !(t.tau > 0.0) {
            return Err(Error::Config("train.tau must be positive".into()));
        }
        if !(1..=6).contains(&self.model.encoder.num_parts) {
            return Err(Error::Config(format!("model.encoder.num_parts must be 1..=6, got {}", self.model.encoder.num_parts)));
        }
        if self.model.codebook_size == 0 {
            return Err(Error::Config("model.codebook_size must be positive".into()));
        }
        if self.prior.batch_size == 0 || !(self.prior.learning_rate > 0.0) {
            return Err(Error::Config("prior batch size and learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_files_fill_defaults() {
        let cfg = RunConfig::from_toml_str("seed = 4\n[model.encoder]\nnum_parts = 1\n[train]\nepochs = 3\n").unwrap();
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.model.encoder.num_parts, 1);
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.train.batch_size, 32);
        assert_eq!(cfg.loss.lambda_m, -50.0);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(RunConfig::from_toml_str("sed = 1").is_err());
        assert!(RunConfig::from_toml_str("[train]\nepoch = 1").is_err());
        assert!(RunConfig::from_toml_str("[model.encoder]\nnum_parts = 7").is_err());
    }

    #[test]
    fn schedule_halves_at_milestones() {
        let t = TrainConfig::default();
        assert_eq!(t.learning_rate_at(0), 1e-4);
        assert_eq!(t.learning_rate_at(59), 1e-4);
        assert_eq!(t.learning_rate_at(60), 5e-5);
        assert_eq!(t.learning_rate_at(199), 1e-4 / 16.0);
    }
}
