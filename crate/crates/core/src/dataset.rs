use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::{read_jsonl, write_jsonl};
use crate::tokenizer::preprocess;

/// One labelled sentence of a corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub text: String,
    pub label: usize,
}

impl Sentence {
    pub fn words(&self) -> Vec<String> {
        preprocess(&self.text)
    }
}

pub fn load_corpus(path: &Path) -> Result<Vec<Sentence>> {
    read_jsonl(path)
}

pub fn save_corpus(path: &Path, corpus: &[Sentence]) -> Result<()> {
    write_jsonl(path, corpus)
}

/// Number of classes implied by the labels (`max label + 1`).
pub fn class_count(corpus: &[Sentence]) -> usize {
    corpus.iter().map(|s| s.label + 1).max().unwrap_or(0)
}
