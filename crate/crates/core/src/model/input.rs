use super::config::{AugmentationMode, ModelConfig};
use crate::error::{Error, Result};
use crate::features::{cognitive_mask, CognitiveRecord, FeatureDb};
use crate::tokenizer::{encode, TokenizedSentence, Vocab};

/// Everything one forward pass needs for one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInput {
    pub layout: TokenizedSentence,
    /// Additive attention mask over key positions.
    pub mask: Vec<f64>,
    /// Per-position EEG tokens (0 at CLS/SEP/PAD), when the mode uses them.
    pub eeg_tokens: Option<Vec<u8>>,
    pub eye_tokens: Option<Vec<u8>>,
    pub sentence_eeg: Option<Vec<f64>>,
}

fn spread(values: &[u8], layout: &TokenizedSentence) -> Vec<u8> {
    let mut out = vec![0; layout.max_len()];
    out[1..=layout.word_count].copy_from_slice(&values[..layout.word_count]);
    out
}

impl ModelInput {
    /// Builds the input for `words`; `record` must be present for augmented modes.
    pub fn new<S: AsRef<str>>(
        words: &[S],
        record: Option<&CognitiveRecord>,
        vocab: &Vocab,
        cfg: &ModelConfig,
    ) -> Result<Self> {
        let layout = encode(words, vocab, cfg.max_len)?;
        Self::from_layout(layout, record, cfg)
    }

    pub fn from_layout(
        layout: TokenizedSentence,
        record: Option<&CognitiveRecord>,
        cfg: &ModelConfig,
    ) -> Result<Self> {
        let mode = cfg.mode;
        let record = match (mode.needs_features(), record) {
            (false, _) => None,
            (true, Some(r)) => Some(r),
            (true, None) => {
                return Err(Error::Validation(format!(
                    "mode {mode} needs a cognitive feature record"
                )))
            }
        };
        if let Some(r) = record {
            let words = layout.word_count + layout.truncated;
            if r.tokens.len() != words {
                return Err(Error::Validation(format!(
                    "record {} has {} tokens but the sentence has {words} words",
                    r.id,
                    r.tokens.len()
                )));
            }
        }
        let mut input = Self {
            mask: layout.base_mask.clone(),
            eeg_tokens: None,
            eye_tokens: None,
            sentence_eeg: None,
            layout,
        };
        if let Some(r) = record {
            let wc = input.layout.word_count;
            if mode.uses_eeg_tokens() {
                input.eeg_tokens = Some(spread(&r.eeg_tokens, &input.layout));
            }
            if mode.uses_eye_tokens() {
                input.eye_tokens = Some(spread(&r.eye_tokens, &input.layout));
            }
            if mode == AugmentationMode::CogMask {
                input.mask = cognitive_mask(&r.n_fixations[..wc], &input.layout)?;
            }
            if mode.uses_sentence_eeg() {
                if r.sentence_eeg.len() != cfg.eeg_channels {
                    return Err(Error::Validation(format!(
                        "record {} has {} EEG channels, model expects {}",
                        r.id,
                        r.sentence_eeg.len(),
                        cfg.eeg_channels
                    )));
                }
                input.sentence_eeg = Some(r.sentence_eeg.clone());
            }
        }
        Ok(input)
    }

    /// Looks the sentence up in `db` when the mode needs features.
    pub fn lookup<S: AsRef<str>>(
        id: &str,
        words: &[S],
        db: Option<&FeatureDb>,
        vocab: &Vocab,
        cfg: &ModelConfig,
    ) -> Result<Self> {
        let record = if cfg.mode.needs_features() {
            let db = db.ok_or_else(|| Error::MissingRecord(id.to_string()))?;
            Some(db.lookup(id)?)
        } else {
            None
        };
        Self::new(words, record, vocab, cfg)
    }

    pub fn max_len(&self) -> usize {
        self.layout.max_len()
    }
}
