use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where encoder weights come from before fine-tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitSource {
    /// Normal(0, `init_std`) weights from the run seed.
    Random,
    /// Tensors present in the checkpoint replace the random ones; the rest
    /// (classifier head, cognitive tables, fusion network) stay random.
    Checkpoint(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub repeats: usize,
    pub weight_decay: f64,
    pub init: InitSource,
    /// Fraction of sentences used for training.
    pub split_ratio: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 15,
            batch_size: 8,
            lr: 5e-5,
            seed: 42,
            repeats: 10,
            weight_decay: 0.01,
            init: InitSource::Random,
            split_ratio: 0.8,
        }
    }
}

impl TrainConfig {
    /// Random initialization, 5 repeats of 10 epochs.
    pub fn robustness(self) -> Self {
        Self {
            init: InitSource::Random,
            repeats: 5,
            epochs: 10,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return bad("lr must be positive");
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1");
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight_decay must be non-negative");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad("split_ratio must lie in (0, 1)");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_presets() {
        let c = TrainConfig::default();
        assert_eq!((c.epochs, c.batch_size, c.lr, c.repeats), (15, 8, 5e-5, 10));
        c.validate().unwrap();
        let r = TrainConfig {
            init: InitSource::Checkpoint("x.ckpt".into()),
            ..c
        }
        .robustness();
        assert_eq!((r.epochs, r.repeats, r.init), (10, 5, InitSource::Random));
    }

    #[test]
    fn invalid_values_rejected() {
        for c in [
            TrainConfig { epochs: 0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { lr: 0.0, ..Default::default() },
            TrainConfig { repeats: 0, ..Default::default() },
            TrainConfig { split_ratio: 1.0, ..Default::default() },
        ] {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn json_uses_defaults_for_missing_fields() {
        let c: TrainConfig = serde_json::from_str(r#"{"epochs": 3, "init": {"checkpoint": "a.ckpt"}}"#).unwrap();
        assert_eq!(c.epochs, 3);
        assert_eq!(c.batch_size, 8);
        assert_eq!(c.init, InitSource::Checkpoint("a.ckpt".into()));
    }
}
