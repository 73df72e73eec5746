use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of fixation-related potentials used for EEG tokens (FFD, TRT, GD, GPT).
pub const FRP_COUNT: usize = 4;
/// Frequency bands per FRP: t1, t2, a1, a2, b1, b2, g1, g2.
pub const BAND_COUNT: usize = 8;
pub const BAND_NAMES: [&str; BAND_COUNT] = ["t1", "t2", "a1", "a2", "b1", "b2", "g1", "g2"];
pub const FRP_NAMES: [&str; FRP_COUNT] = ["ffd", "trt", "gd", "gpt"];

/// Eye-tracking measures for one word, durations in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WordFixation {
    pub n_fixations: u32,
    pub ffd: f64,
    pub trt: f64,
    pub gd: f64,
    pub gpt: f64,
    /// Single-fixation duration. Carried through but not used by any token formula.
    #[serde(default)]
    pub sfd: f64,
}

impl WordFixation {
    pub fn unfixated() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        let durations = [self.ffd, self.trt, self.gd, self.gpt, self.sfd];
        if durations.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::Validation(format!(
                "fixation durations must be finite and non-negative: {durations:?}"
            )));
        }
        if self.n_fixations == 0 && durations.iter().any(|d| *d != 0.0) {
            return Err(Error::Validation(
                "unfixated word has non-zero durations".into(),
            ));
        }
        Ok(())
    }
}

/// Word-level EEG: one channel vector per (FRP, band) pair, FRP-major
/// (`ffd_t1 … ffd_g2, trt_t1 …, gd_…, gpt_…`). Empty when the word was not fixated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WordEEG {
    pub vectors: Vec<Vec<f64>>,
}

impl WordEEG {
    pub fn absent() -> Self {
        Self::default()
    }

    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let e = Self { vectors };
        e.validate()?;
        Ok(e)
    }

    pub fn is_present(&self) -> bool {
        !self.vectors.is_empty()
    }

    pub fn channels(&self) -> Option<usize> {
        self.vectors.first().map(Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vectors.is_empty() {
            return Ok(());
        }
        if self.vectors.len() != FRP_COUNT * BAND_COUNT {
            return Err(Error::Validation(format!(
                "word EEG needs {} vectors, got {}",
                FRP_COUNT * BAND_COUNT,
                self.vectors.len()
            )));
        }
        let c = self.vectors[0].len();
        if c == 0 || self.vectors.iter().any(|v| v.len() != c) {
            return Err(Error::Validation(
                "word EEG vectors have inconsistent lengths".into(),
            ));
        }
        if self.vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Validation("word EEG contains non-finite values".into()));
        }
        Ok(())
    }
}

/// One word with its measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordMeasurement {
    pub word: String,
    pub fixation: WordFixation,
    #[serde(default)]
    pub eeg: WordEEG,
}

/// A sentence with per-word measurements and its sentence-level band vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceMeasurements {
    pub id: String,
    pub label: usize,
    pub words: Vec<WordMeasurement>,
    /// Eight band vectors (t1 … g2), each of length C.
    pub sentence_bands: Vec<Vec<f64>>,
}

impl SentenceMeasurements {
    pub fn validate(&self) -> Result<()> {
        for w in &self.words {
            w.fixation.validate()?;
            w.eeg.validate()?;
            if w.fixation.n_fixations == 0 && w.eeg.is_present() {
                return Err(Error::Validation(format!(
                    "sentence {}: unfixated word `{}` carries EEG vectors",
                    self.id, w.word
                )));
            }
        }
        Ok(())
    }

    pub fn words(&self) -> Vec<String> {
        self.words.iter().map(|w| w.word.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixation_validation() {
        assert!(WordFixation::unfixated().validate().is_ok());
        let neg = WordFixation {
            n_fixations: 1,
            ffd: -1.0,
            ..Default::default()
        };
        assert!(neg.validate().is_err());
        let ghost = WordFixation {
            n_fixations: 0,
            trt: 10.0,
            ..Default::default()
        };
        assert!(ghost.validate().is_err());
    }

    #[test]
    fn eeg_validation() {
        assert!(WordEEG::new(vec![vec![1.0; 3]; 32]).is_ok());
        assert!(WordEEG::new(vec![vec![1.0; 3]; 31]).is_err());
        let mut v = vec![vec![1.0; 3]; 32];
        v[7] = vec![1.0; 2];
        assert!(WordEEG::new(v).is_err());
    }

    #[test]
    fn eeg_serializes_as_bare_array() {
        let e = WordEEG::absent();
        assert_eq!(serde_json::to_string(&e).unwrap(), "[]");
    }
}
