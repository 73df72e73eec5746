use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::LAYER_NORM_EPS;
use crate::tokenizer::{DEFAULT_MAX_LEN, SEP_ID};

/// Where (if anywhere) cognitive features enter the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentationMode {
    None,
    EegEmbed,
    EyeEmbed,
    BothEmbed,
    CogMask,
    PoolConcat,
    PoolConcatNn,
    PoolMultiply,
    PoolAddNn,
}

impl AugmentationMode {
    pub const ALL: [AugmentationMode; 9] = [
        Self::None,
        Self::EegEmbed,
        Self::EyeEmbed,
        Self::BothEmbed,
        Self::CogMask,
        Self::PoolConcat,
        Self::PoolConcatNn,
        Self::PoolMultiply,
        Self::PoolAddNn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::EegEmbed => "eeg_embed",
            Self::EyeEmbed => "eye_embed",
            Self::BothEmbed => "both_embed",
            Self::CogMask => "cog_mask",
            Self::PoolConcat => "pool_concat",
            Self::PoolConcatNn => "pool_concat_nn",
            Self::PoolMultiply => "pool_multiply",
            Self::PoolAddNn => "pool_add_nn",
        }
    }

    pub fn uses_eeg_tokens(self) -> bool {
        matches!(self, Self::EegEmbed | Self::BothEmbed)
    }

    pub fn uses_eye_tokens(self) -> bool {
        matches!(self, Self::EyeEmbed | Self::BothEmbed)
    }

    pub fn uses_cognitive_mask(self) -> bool {
        self == Self::CogMask
    }

    pub fn uses_sentence_eeg(self) -> bool {
        matches!(
            self,
            Self::PoolConcat | Self::PoolConcatNn | Self::PoolMultiply | Self::PoolAddNn
        )
    }

    pub fn has_fusion_net(self) -> bool {
        matches!(self, Self::PoolConcatNn | Self::PoolAddNn)
    }

    /// Whether a feature record is required for every sentence.
    pub fn needs_features(self) -> bool {
        self != Self::None
    }
}

impl fmt::Display for AugmentationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AugmentationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown augmentation mode `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub layers: usize,
    pub heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub max_len: usize,
    pub vocab_size: usize,
    pub n_classes: usize,
    pub eeg_channels: usize,
    pub dropout: f64,
    pub mode: AugmentationMode,
    pub init_std: f64,
    pub layer_norm_eps: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            layers: 2,
            heads: 2,
            d_model: 32,
            d_ff: 64,
            max_len: DEFAULT_MAX_LEN,
            vocab_size: 256,
            n_classes: 8,
            eeg_channels: 8,
            dropout: 0.1,
            mode: AugmentationMode::None,
            init_std: 0.02,
            layer_norm_eps: LAYER_NORM_EPS,
        }
    }
}

impl ModelConfig {
    /// BERT-base dimensions with 105 EEG channels.
    pub fn bert_base() -> Self {
        Self {
            layers: 12,
            heads: 12,
            d_model: 768,
            d_ff: 3072,
            max_len: 512,
            vocab_size: 30522,
            eeg_channels: 105,
            ..Self::default()
        }
    }

    /// Small configuration used for finite-difference checks.
    pub fn tiny() -> Self {
        Self {
            layers: 2,
            heads: 2,
            d_model: 16,
            d_ff: 32,
            max_len: 16,
            vocab_size: 110,
            n_classes: 3,
            eeg_channels: 4,
            dropout: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.layers == 0 {
            return bad("layers must be at least 1");
        }
        if self.heads == 0 || self.d_model == 0 || self.d_model % self.heads != 0 {
            return bad("d_model must be a positive multiple of heads");
        }
        if self.d_ff == 0 {
            return bad("d_ff must be positive");
        }
        if self.max_len < 3 {
            return bad("max_len must be at least 3");
        }
        if self.vocab_size <= SEP_ID {
            return bad("vocab_size must cover the reserved ids (> 102)");
        }
        if self.n_classes < 2 {
            return bad("n_classes must be at least 2");
        }
        if self.eeg_channels == 0 {
            return bad("eeg_channels must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(self.init_std > 0.0) || !(self.layer_norm_eps > 0.0) {
            return bad("init_std and layer_norm_eps must be positive");
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.heads
    }

    /// Length of the vector fed to the classifier.
    pub fn classifier_input_dim(&self) -> usize {
        match self.mode {
            AugmentationMode::PoolConcat => self.d_model + self.eeg_channels,
            AugmentationMode::PoolConcatNn => 2 * self.d_model,
            _ => self.d_model,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_names_round_trip() {
        for m in AugmentationMode::ALL {
            assert_eq!(m.name().parse::<AugmentationMode>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        assert!("pool".parse::<AugmentationMode>().is_err());
    }

    #[test]
    fn classifier_widths_at_bert_base_scale() {
        let mut cfg = ModelConfig::bert_base();
        cfg.mode = AugmentationMode::PoolConcat;
        assert_eq!(cfg.classifier_input_dim(), 873);
        cfg.mode = AugmentationMode::PoolConcatNn;
        assert_eq!(cfg.classifier_input_dim(), 1536);
        cfg.mode = AugmentationMode::PoolAddNn;
        assert_eq!(cfg.classifier_input_dim(), 768);
        assert_eq!(cfg.layers * cfg.heads, 144);
    }

    #[test]
    fn validation() {
        assert!(ModelConfig::default().validate().is_ok());
        assert!(ModelConfig::tiny().validate().is_ok());
        let zero_layers = ModelConfig {
            layers: 0,
            ..ModelConfig::default()
        };
        assert!(zero_layers.validate().is_err());
        let uneven = ModelConfig {
            d_model: 30,
            heads: 4,
            ..ModelConfig::default()
        };
        assert!(uneven.validate().is_err());
        let dropout = ModelConfig {
            dropout: 1.0,
            ..ModelConfig::default()
        };
        assert!(dropout.validate().is_err());
    }
}
