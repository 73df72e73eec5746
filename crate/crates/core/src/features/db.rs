use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::measurements::SentenceMeasurements;
use super::tokens::{eeg_token_raw, eye_token_raw, scale_eeg_tokens, scale_eye_tokens, sentence_eeg};
use crate::error::{Error, Result};
use crate::io::{read_jsonl, write_jsonl};
use crate::tokenizer::preprocess;

/// Derived cognitive features of one sentence. Per-token arrays cover the
/// content words only; special positions are filled in at encoding time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CognitiveRecord {
    pub id: String,
    pub tokens: Vec<String>,
    pub label: usize,
    pub n_fixations: Vec<u32>,
    pub eye_tokens: Vec<u8>,
    pub eeg_tokens: Vec<u8>,
    pub sentence_eeg: Vec<f64>,
}

impl CognitiveRecord {
    /// Record with no fixations, for corpora without recordings.
    pub fn without_measurements(id: String, tokens: Vec<String>, label: usize, channels: usize) -> Self {
        let n = tokens.len();
        Self {
            id,
            tokens,
            label,
            n_fixations: vec![0; n],
            eye_tokens: vec![0; n],
            eeg_tokens: vec![0; n],
            sentence_eeg: vec![0.0; channels],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.tokens.len();
        if self.n_fixations.len() != n || self.eye_tokens.len() != n || self.eeg_tokens.len() != n {
            return Err(Error::Validation(format!(
                "record {}: per-token arrays do not match {n} tokens",
                self.id
            )));
        }
        for i in 0..n {
            if self.eye_tokens[i] > 100 || self.eeg_tokens[i] > 100 {
                return Err(Error::Validation(format!(
                    "record {}: cognitive token above 100 at word {i}",
                    self.id
                )));
            }
            if self.n_fixations[i] == 0 && (self.eye_tokens[i] != 0 || self.eeg_tokens[i] != 0) {
                return Err(Error::Validation(format!(
                    "record {}: unfixated word {i} has a non-zero cognitive token",
                    self.id
                )));
            }
        }
        if self.sentence_eeg.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation(format!(
                "record {}: non-finite sentence EEG",
                self.id
            )));
        }
        Ok(())
    }
}

/// Sentence id → cognitive record, in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureDb {
    records: Vec<CognitiveRecord>,
    index: HashMap<String, usize>,
}

impl FeatureDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<CognitiveRecord>) -> Result<Self> {
        let mut db = Self::new();
        for r in records {
            db.insert(r)?;
        }
        Ok(db)
    }

    pub fn insert(&mut self, record: CognitiveRecord) -> Result<()> {
        record.validate()?;
        if self.index.contains_key(&record.id) {
            return Err(Error::Validation(format!("duplicate sentence id `{}`", record.id)));
        }
        self.index.insert(record.id.clone(), self.records.len());
        self.records.push(record);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&CognitiveRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn lookup(&self, id: &str) -> Result<&CognitiveRecord> {
        self.get(id).ok_or_else(|| Error::MissingRecord(id.to_string()))
    }

    /// Records for a batch of ids, in batch order.
    pub fn lookup_batch<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<&CognitiveRecord>> {
        ids.iter().map(|id| self.lookup(id.as_ref())).collect()
    }

    pub fn records(&self) -> &[CognitiveRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Channel count of the sentence EEG vectors (0 for an empty db).
    pub fn channels(&self) -> usize {
        self.records.first().map_or(0, |r| r.sentence_eeg.len())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_jsonl(path, &self.records)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_records(read_jsonl(path)?)
    }
}

/// Derives every cognitive feature from raw measurements.
///
/// Eye tokens are scaled per sentence; EEG tokens are min-max scaled over
/// the whole corpus.
pub fn derive_feature_db(sentences: &[SentenceMeasurements]) -> Result<FeatureDb> {
    let mut eeg_raw = Vec::new();
    for s in sentences {
        s.validate()?;
        for w in &s.words {
            eeg_raw.push(if w.eeg.is_present() {
                Some(eeg_token_raw(&w.eeg)?)
            } else {
                None
            });
        }
    }
    let eeg_scaled = scale_eeg_tokens(&eeg_raw)?;

    let mut db = FeatureDb::new();
    let mut offset = 0;
    for s in sentences {
        let tokens: Vec<String> = s.words.iter().map(|w| w.word.clone()).collect();
        for t in &tokens {
            if preprocess(t) != [t.as_str()] {
                return Err(Error::Validation(format!(
                    "sentence {}: word `{t}` is not in preprocessed form",
                    s.id
                )));
            }
        }
        let eye_raw = s
            .words
            .iter()
            .map(|w| eye_token_raw(&w.fixation))
            .collect::<Result<Vec<_>>>()?;
        let n = s.words.len();
        db.insert(CognitiveRecord {
            id: s.id.clone(),
            tokens,
            label: s.label,
            n_fixations: s.words.iter().map(|w| w.fixation.n_fixations).collect(),
            eye_tokens: scale_eye_tokens(&eye_raw)?,
            eeg_tokens: eeg_scaled[offset..offset + n].to_vec(),
            sentence_eeg: sentence_eeg(&s.sentence_bands)?,
        })?;
        offset += n;
    }
    Ok(db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::measurements::{WordEEG, WordFixation, WordMeasurement};

    fn word(w: &str, n: u32, level: f64) -> WordMeasurement {
        let fixation = if n == 0 {
            WordFixation::unfixated()
        } else {
            WordFixation {
                n_fixations: n,
                ffd: 100.0,
                trt: 100.0,
                gd: 100.0,
                gpt: 100.0,
                sfd: 0.0,
            }
        };
        let eeg = if n == 0 {
            WordEEG::absent()
        } else {
            WordEEG::new(vec![vec![level; 2]; 32]).unwrap()
        };
        WordMeasurement {
            word: w.into(),
            fixation,
            eeg,
        }
    }

    fn sentence(id: &str, words: Vec<WordMeasurement>) -> SentenceMeasurements {
        SentenceMeasurements {
            id: id.into(),
            label: 1,
            words,
            sentence_bands: vec![vec![1.0, 2.0]; 8],
        }
    }

    #[test]
    fn derive_matches_formulas() {
        let db = derive_feature_db(&[
            sentence("a", vec![word("he", 0, 0.0), word("won", 2, 3.0)]),
            sentence("b", vec![word("the", 1, 6.0)]),
        ])
        .unwrap();
        let a = db.lookup("a").unwrap();
        assert_eq!(a.eye_tokens, [0, 100]);
        assert_eq!(a.eeg_tokens, [0, 50]);
        assert_eq!(a.n_fixations, [0, 2]);
        assert_eq!(a.sentence_eeg, [1.0, 2.0]);
        let b = db.lookup("b").unwrap();
        assert_eq!(b.eye_tokens, [100]);
        assert_eq!(b.eeg_tokens, [100]);
    }

    #[test]
    fn lookup_batch_preserves_order_and_names_missing_ids() {
        let db = derive_feature_db(&[
            sentence("x", vec![word("a", 2, 1.0)]),
            sentence("y", vec![word("b", 2, 1.0)]),
        ])
        .unwrap();
        let got: Vec<&str> = db
            .lookup_batch(&["y", "x", "y"])
            .unwrap()
            .iter()
            .map(|r| r.id.as_str())
            .collect();
        assert_eq!(got, ["y", "x", "y"]);
        let err = db.lookup_batch(&["x", "nope"]).unwrap_err();
        assert!(err.to_string().contains("nope"));
    }

    #[test]
    fn rejects_inconsistent_records() {
        let mut r = CognitiveRecord::without_measurements("r".into(), vec!["a".into()], 0, 2);
        r.eye_tokens[0] = 5;
        assert!(FeatureDb::from_records(vec![r]).is_err());
        let r = CognitiveRecord::without_measurements("r".into(), vec!["a".into()], 0, 2);
        assert!(FeatureDb::from_records(vec![r.clone(), r]).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let db = derive_feature_db(&[sentence("a", vec![word("he", 0, 0.0), word("won", 2, 3.0)])])
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.jsonl");
        db.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        for key in ["id", "tokens", "label", "n_fixations", "eye_tokens", "eeg_tokens", "sentence_eeg"] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
        assert_eq!(FeatureDb::load(&path).unwrap(), db);
    }
}
