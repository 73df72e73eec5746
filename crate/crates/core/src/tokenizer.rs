//! Whole-word tokenizer with BERT-style special tokens.
//!
//! One word maps to one token so every word-level cognitive feature lines up
//! with exactly one position.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 100;
pub const CLS_ID: usize = 101;
pub const SEP_ID: usize = 102;

pub const PAD_TOKEN: &str = "[PAD]";
pub const UNK_TOKEN: &str = "[UNK]";
pub const CLS_TOKEN: &str = "[CLS]";
pub const SEP_TOKEN: &str = "[SEP]";

/// Additive mask value for suppressed positions.
pub const MASK_NEG: f64 = -10000.0;

pub const DEFAULT_MAX_LEN: usize = 64;

const RESERVED: [(&str, usize); 4] = [
    (PAD_TOKEN, PAD_ID),
    (UNK_TOKEN, UNK_ID),
    (CLS_TOKEN, CLS_ID),
    (SEP_TOKEN, SEP_ID),
];

fn is_reserved_id(id: usize) -> bool {
    RESERVED.iter().any(|&(_, r)| r == id)
}

/// Lowercases, strips every non-alphanumeric character inside a word and
/// splits on whitespace.
pub fn preprocess(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    word_to_id: HashMap<String, usize>,
    id_to_word: BTreeMap<usize, String>,
}

impl Vocab {
    /// Vocabulary holding only the reserved tokens.
    pub fn reserved_only() -> Self {
        let mut v = Self {
            word_to_id: HashMap::new(),
            id_to_word: BTreeMap::new(),
        };
        for (w, id) in RESERVED {
            v.word_to_id.insert(w.to_string(), id);
            v.id_to_word.insert(id, w.to_string());
        }
        v
    }

    /// Ids go to words by descending frequency, then lexicographically,
    /// skipping the reserved ids.
    pub fn build<S: AsRef<str>>(corpus: &[S], min_freq: usize) -> Self {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for sentence in corpus {
            for w in preprocess(sentence.as_ref()) {
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut words: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(w, c)| *c >= min_freq.max(1) && !RESERVED.iter().any(|(r, _)| r == w))
            .collect();
        words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

        let mut vocab = Self::reserved_only();
        let mut next = 1;
        for (w, _) in words {
            while is_reserved_id(next) {
                next += 1;
            }
            vocab.word_to_id.insert(w.clone(), next);
            vocab.id_to_word.insert(next, w);
            next += 1;
        }
        vocab
    }

    /// Number of rows an embedding table needs (`max id + 1`).
    pub fn size(&self) -> usize {
        self.id_to_word.keys().next_back().map_or(0, |m| m + 1)
    }

    /// Number of non-reserved words.
    pub fn word_count(&self) -> usize {
        self.id_to_word.len() - RESERVED.len()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.id_to_word.get(&id).map(String::as_str)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.word_to_id.contains_key(word)
    }

    /// Pairs ordered by id.
    pub fn entries(&self) -> impl Iterator<Item = (&str, usize)> {
        self.id_to_word.iter().map(|(id, w)| (w.as_str(), *id))
    }

    /// `word<TAB>id` per line, ordered by id.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (w, id) in self.entries() {
            out.push_str(w);
            out.push('\t');
            out.push_str(&id.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut v = Self {
            word_to_id: HashMap::new(),
            id_to_word: BTreeMap::new(),
        };
        for (n, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (w, id) = line
                .split_once('\t')
                .ok_or_else(|| Error::Validation(format!("vocab line {}: missing tab", n + 1)))?;
            let id: usize = id
                .trim()
                .parse()
                .map_err(|_| Error::Validation(format!("vocab line {}: bad id `{id}`", n + 1)))?;
            if v.word_to_id.insert(w.to_string(), id).is_some() || v.id_to_word.insert(id, w.to_string()).is_some() {
                return Err(Error::Validation(format!("vocab line {}: duplicate entry", n + 1)));
            }
        }
        for (w, id) in RESERVED {
            if v.id(w) != Some(id) {
                return Err(Error::Validation(format!("vocab is missing reserved token {w}={id}")));
            }
        }
        Ok(v)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedSentence {
    pub ids: Vec<usize>,
    /// `0.0` at CLS, words and SEP; [`MASK_NEG`] at PAD.
    pub base_mask: Vec<f64>,
    pub token_type_ids: Vec<usize>,
    pub word_count: usize,
    /// Words dropped to fit `max_len`.
    pub truncated: usize,
}

impl TokenizedSentence {
    pub fn max_len(&self) -> usize {
        self.ids.len()
    }

    /// CLS, words and SEP.
    pub fn real_len(&self) -> usize {
        self.word_count + 2
    }

    pub fn sep_position(&self) -> usize {
        self.word_count + 1
    }

    pub fn is_word_position(&self, pos: usize) -> bool {
        pos >= 1 && pos <= self.word_count
    }
}

/// `[CLS] words… [SEP] [PAD]…` padded to `max_len`.
pub fn encode<S: AsRef<str>>(words: &[S], vocab: &Vocab, max_len: usize) -> Result<TokenizedSentence> {
    if max_len < 3 {
        return Err(Error::Validation(format!("max_len must be at least 3, got {max_len}")));
    }
    let keep = words.len().min(max_len - 2);
    let mut ids = Vec::with_capacity(max_len);
    ids.push(CLS_ID);
    ids.extend(
        words[..keep]
            .iter()
            .map(|w| vocab.id(w.as_ref()).unwrap_or(UNK_ID)),
    );
    ids.push(SEP_ID);
    ids.resize(max_len, PAD_ID);
    let base_mask = (0..max_len)
        .map(|i| if i < keep + 2 { 0.0 } else { MASK_NEG })
        .collect();
    Ok(TokenizedSentence {
        ids,
        base_mask,
        token_type_ids: vec![0; max_len],
        word_count: keep,
        truncated: words.len() - keep,
    })
}

/// Content words of an encoding; unknown ids come back as `[UNK]`.
pub fn decode(sentence: &TokenizedSentence, vocab: &Vocab) -> Vec<String> {
    sentence.ids[1..=sentence.word_count]
        .iter()
        .map(|&id| vocab.word(id).unwrap_or(UNK_TOKEN).to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn preprocess_examples() {
        assert_eq!(
            preprocess("He won the Nobel Prize."),
            ["he", "won", "the", "nobel", "prize"]
        );
        assert!(preprocess("...").is_empty());
        assert_eq!(preprocess("U.S.-based"), ["usbased"]);
    }

    #[test]
    fn vocab_ordering_and_threshold() {
        let v = Vocab::build(&["a b", "a"], 1);
        assert_eq!(v.id("a"), Some(1));
        assert_eq!(v.id("b"), Some(2));
        let v = Vocab::build(&["a b", "a"], 2);
        assert!(v.contains("a") && !v.contains("b"));
        let v = Vocab::build(&["...", "!!"], 1);
        assert_eq!(v, Vocab::reserved_only());
        assert_eq!(v.word_count(), 0);
    }

    #[test]
    fn vocab_skips_reserved_ids() {
        let corpus: Vec<String> = (0..120).map(|i| format!("w{i:03}")).collect();
        let v = Vocab::build(&corpus, 1);
        let ids: Vec<usize> = (0..120).map(|i| v.id(&format!("w{i:03}")).unwrap()).collect();
        assert!(ids.iter().all(|id| !is_reserved_id(*id)));
        assert_eq!(v.size(), 124);
        assert_eq!(v.word(CLS_ID), Some(CLS_TOKEN));
    }

    #[test]
    fn tsv_round_trip() {
        let v = Vocab::build(&["the cat sat", "the dog"], 1);
        let text = v.to_tsv();
        assert!(text.starts_with("[PAD]\t0\n"));
        assert_eq!(Vocab::from_tsv(&text).unwrap(), v);
        assert!(Vocab::from_tsv("a\t1\n").is_err());
    }

    #[test]
    fn encode_examples() {
        let v = Vocab::build(&["he won"], 1);
        let e = encode::<&str>(&[], &v, 6).unwrap();
        assert_eq!(e.ids, [101, 102, 0, 0, 0, 0]);
        let e = encode(&["he", "won"], &v, 6).unwrap();
        assert_eq!(e.ids, [101, v.id("he").unwrap(), v.id("won").unwrap(), 102, 0, 0]);
        assert_eq!(e.base_mask, [0.0, 0.0, 0.0, 0.0, MASK_NEG, MASK_NEG]);
        let e = encode(&["he", "lost"], &v, 6).unwrap();
        assert_eq!(e.ids[2], UNK_ID);
        assert!(encode(&["he"], &v, 2).is_err());
    }

    #[test]
    fn encode_truncates_and_counts() {
        let v = Vocab::build(&["a b c d e"], 1);
        let e = encode(&["a", "b", "c", "d", "e"], &v, 5).unwrap();
        assert_eq!(e.word_count, 3);
        assert_eq!(e.truncated, 2);
        assert_eq!(e.ids[4], SEP_ID);
    }

    proptest! {
        #[test]
        fn encode_layout_invariants(text in "[a-e ,.]{0,40}", max_len in 3usize..20) {
            let v = Vocab::build(&["a b c"], 1);
            let words = preprocess(&text);
            let e = encode(&words, &v, max_len).unwrap();
            prop_assert_eq!(e.ids.len(), max_len);
            prop_assert_eq!(e.ids[0], CLS_ID);
            prop_assert_eq!(e.ids[e.word_count + 1], SEP_ID);
            for i in 0..max_len {
                let pad = i > e.word_count + 1;
                prop_assert_eq!(e.ids[i] == PAD_ID, pad);
                prop_assert_eq!(e.base_mask[i], if pad { MASK_NEG } else { 0.0 });
            }
            if e.truncated == 0 && words.iter().all(|w| v.contains(w)) {
                prop_assert_eq!(decode(&e, &v), words);
            }
        }
    }
}
