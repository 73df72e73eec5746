//! Word-EEG lexicon: corpus-averaged EEG vector per word, used to
//! approximate sentence EEG for text without recordings.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::measurements::WordEEG;
use super::tokens::word_eeg_vector;
use crate::error::{Error, Result};
use crate::io::{read_jsonl, write_jsonl};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub word: String,
    pub count: usize,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EegLexicon {
    entries: BTreeMap<String, LexiconEntry>,
    channels: usize,
}

/// Sentence vector from the lexicon plus how many words it covered.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexiconSentence {
    pub vector: Vec<f64>,
    pub covered: usize,
    pub total: usize,
}

impl LexiconSentence {
    pub fn coverage(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.covered as f64 / self.total as f64
        }
    }
}

impl EegLexicon {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn get(&self, word: &str) -> Option<&LexiconEntry> {
        self.entries.get(word)
    }

    /// Entries sorted by word.
    pub fn entries(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.entries.values()
    }

    pub fn from_entries(entries: Vec<LexiconEntry>) -> Result<Self> {
        let channels = entries.first().map_or(0, |e| e.vector.len());
        let mut map = BTreeMap::new();
        for e in entries {
            if e.count == 0 || e.vector.len() != channels {
                return Err(Error::Validation(format!("bad lexicon entry for `{}`", e.word)));
            }
            if map.insert(e.word.clone(), e).is_some() {
                return Err(Error::Validation("duplicate lexicon word".into()));
            }
        }
        Ok(Self {
            entries: map,
            channels,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let entries: Vec<&LexiconEntry> = self.entries().collect();
        write_jsonl(path, &entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_entries(read_jsonl(path)?)
    }
}

/// Averages, per word, the per-occurrence EEG vectors (each the column mean
/// of that occurrence's 32 FRP×band vectors). Unfixated occurrences do not
/// contribute; words never fixated are left out.
pub fn build_lexicon<'a, I>(occurrences: I) -> Result<EegLexicon>
where
    I: IntoIterator<Item = (&'a str, &'a WordEEG)>,
{
    let mut sums: BTreeMap<String, (Vec<f64>, usize)> = BTreeMap::new();
    let mut channels = None;
    for (word, eeg) in occurrences {
        let Some(v) = word_eeg_vector(eeg)? else {
            continue;
        };
        match channels {
            None => channels = Some(v.len()),
            Some(c) if c != v.len() => {
                return Err(Error::Validation(format!(
                    "word `{word}` has {} channels, expected {c}",
                    v.len()
                )))
            }
            _ => {}
        }
        let slot = sums
            .entry(word.to_string())
            .or_insert_with(|| (vec![0.0; v.len()], 0));
        for (s, x) in slot.0.iter_mut().zip(&v) {
            *s += x;
        }
        slot.1 += 1;
    }
    let entries = sums
        .into_iter()
        .map(|(word, (sum, count))| LexiconEntry {
            vector: sum.iter().map(|s| s / count as f64).collect(),
            word,
            count,
        })
        .collect();
    EegLexicon::from_entries(entries)
}

/// Mean lexicon vector over the covered words; a zero vector with
/// `covered == 0` when none are in the lexicon.
pub fn lexicon_sentence_eeg<S: AsRef<str>>(words: &[S], lex: &EegLexicon) -> LexiconSentence {
    let mut vector = vec![0.0; lex.channels()];
    let mut covered = 0;
    for w in words {
        if let Some(e) = lex.get(w.as_ref()) {
            for (o, x) in vector.iter_mut().zip(&e.vector) {
                *o += x;
            }
            covered += 1;
        }
    }
    if covered > 0 {
        vector.iter_mut().for_each(|o| *o /= covered as f64);
    }
    LexiconSentence {
        vector,
        covered,
        total: words.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn occ(v: [f64; 2]) -> WordEEG {
        WordEEG::new(vec![v.to_vec(); 32]).unwrap()
    }

    #[test]
    fn averages_occurrences() {
        let (a, b) = (occ([1.0, 3.0]), occ([3.0, 5.0]));
        let lex = build_lexicon([("w", &a), ("w", &b)]).unwrap();
        let e = lex.get("w").unwrap();
        assert_eq!(e.vector, [2.0, 4.0]);
        assert_eq!(e.count, 2);

        let lex = build_lexicon([("w", &a)]).unwrap();
        assert_eq!(lex.get("w").unwrap().vector, [1.0, 3.0]);

        let none = WordEEG::absent();
        let lex = build_lexicon([("w", &a), ("ghost", &none), ("ghost", &none)]).unwrap();
        assert!(lex.get("ghost").is_none());
        assert_eq!(lex.len(), 1);
    }

    #[test]
    fn sentence_vectors() {
        let (a, b) = (occ([0.0, 2.0]), occ([2.0, 4.0]));
        let lex = build_lexicon([("x", &a), ("y", &b)]).unwrap();
        let s = lexicon_sentence_eeg(&["x", "y"], &lex);
        assert_eq!(s.vector, [1.0, 3.0]);
        assert_eq!(s.covered, 2);
        let s = lexicon_sentence_eeg(&["q", "r"], &lex);
        assert_eq!(s.vector, [0.0, 0.0]);
        assert_eq!(s.covered, 0);
        let s = lexicon_sentence_eeg(&["q", "y"], &lex);
        assert_eq!(s.vector, [2.0, 4.0]);
        assert_eq!(s.coverage(), 0.5);
    }

    #[test]
    fn jsonl_round_trip() {
        let (a, b) = (occ([0.0, 2.0]), occ([2.0, 4.0]));
        let lex = build_lexicon([("x", &a), ("y", &b), ("x", &b)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lex.jsonl");
        lex.save(&p).unwrap();
        let line = std::fs::read_to_string(&p).unwrap();
        assert!(line.starts_with(r#"{"word":"x","count":2,"vector":[1.0,3.0]}"#), "{line}");
        assert_eq!(EegLexicon::load(&p).unwrap(), lex);
    }
}
