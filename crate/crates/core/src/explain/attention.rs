use serde::{Deserialize, Serialize};

use crate::model::AttentionTrace;
use crate::tokenizer::TokenizedSentence;

/// Score attached to one token position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenScore {
    pub position: usize,
    pub word: String,
    pub score: f64,
}

/// Incoming attention per real token: `Σ_layer Σ_head Σ_row A[row][col]`,
/// summing only rows of real (non-PAD) tokens. Entries are in position order,
/// with CLS and SEP included.
pub fn accumulate_attention(trace: &AttentionTrace, layout: &TokenizedSentence, words: &[String]) -> Vec<TokenScore> {
    let real = layout.real_len();
    let mut scores = vec![0.0; real];
    for a in trace.matrices() {
        for i in 0..real {
            for (s, v) in scores.iter_mut().zip(&a.row(i)[..real]) {
                *s += v;
            }
        }
    }
    scores
        .into_iter()
        .enumerate()
        .map(|(position, score)| TokenScore {
            position,
            word: token_word(position, layout, words),
            score,
        })
        .collect()
}

fn token_word(position: usize, layout: &TokenizedSentence, words: &[String]) -> String {
    if layout.is_word_position(position) {
        words[position - 1].clone()
    } else if position == 0 {
        crate::tokenizer::CLS_TOKEN.to_string()
    } else {
        crate::tokenizer::SEP_TOKEN.to_string()
    }
}

/// Highest-scoring word positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopK {
    pub positions: Vec<usize>,
    pub words: Vec<String>,
    /// Set when fewer than `k` candidates existed.
    pub short: bool,
}

/// The `k` best entries of `scores` whose position is a word position of
/// `layout`; ties go to the earlier position.
pub fn top_k(scores: &[TokenScore], k: usize, layout: &TokenizedSentence) -> TopK {
    let mut cand: Vec<&TokenScore> = scores.iter().filter(|s| layout.is_word_position(s.position)).collect();
    cand.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.position.cmp(&b.position)));
    let short = cand.len() < k;
    cand.truncate(k);
    TopK {
        positions: cand.iter().map(|s| s.position).collect(),
        words: cand.iter().map(|s| s.word.clone()).collect(),
        short,
    }
}

/// `|set(a) ∩ set(b)| / k`.
pub fn correlate(a: &[String], b: &[String], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let sa: std::collections::BTreeSet<&String> = a.iter().collect();
    let sb: std::collections::BTreeSet<&String> = b.iter().collect();
    sa.intersection(&sb).count() as f64 / k as f64
}
