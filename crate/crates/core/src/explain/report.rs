use serde::{Deserialize, Serialize};

use super::attention::{accumulate_attention, correlate, top_k, TokenScore, TopK};
use super::lime::{lime_explain, EncoderPredictor, LimeConfig};
use crate::error::Result;
use crate::features::CognitiveRecord;
use crate::model::{Encoder, ModelInput};
use crate::tokenizer::Vocab;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub sentence_id: String,
    pub predicted_class: usize,
    /// Incoming attention of every real token, CLS and SEP included.
    pub attention: Vec<TokenScore>,
    pub lime: Vec<TokenScore>,
    pub k: usize,
    pub attention_top: TopK,
    pub lime_top: TopK,
    pub overlap: f64,
}

impl ExplanationReport {
    /// `position,word,attention,lime`, one row per word. Attention is empty
    /// for words cut off by truncation.
    pub fn heatmap_csv(&self) -> String {
        let mut out = String::from("position,word,attention,lime\n");
        for l in &self.lime {
            let attn = self
                .attention
                .iter()
                .find(|a| a.position == l.position)
                .map(|a| a.score.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", l.position, l.word, attn, l.score));
        }
        out
    }
}

/// Runs both explainers on one sentence.
pub fn explain_sentence(
    encoder: &Encoder,
    vocab: &Vocab,
    id: &str,
    words: &[String],
    record: Option<&CognitiveRecord>,
    k: usize,
    lime: &LimeConfig,
) -> Result<ExplanationReport> {
    let cfg = encoder.config();
    let record = record.filter(|_| cfg.mode.needs_features());
    let input = ModelInput::new(words, record, vocab, cfg)?;
    let pass = encoder.forward(&input)?;
    let attention = accumulate_attention(&pass.trace(), &input.layout, words);
    let predictor = EncoderPredictor {
        encoder,
        vocab,
        words,
        record,
    };
    let lime = lime_explain(&predictor, words, lime)?.scores;
    let attention_top = top_k(&attention, k, &input.layout);
    // LIME also scores truncated words; rank them with the same rule
    let lime_layout = crate::tokenizer::TokenizedSentence {
        word_count: words.len(),
        ..input.layout.clone()
    };
    let lime_top = top_k(&lime, k, &lime_layout);
    let overlap = correlate(&attention_top.words, &lime_top.words, k);
    Ok(ExplanationReport {
        sentence_id: id.to_string(),
        predicted_class: pass.prediction(),
        attention,
        lime,
        k,
        attention_top,
        lime_top,
        overlap,
    })
}

/// Per-sentence overlaps and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapSummary {
    pub k: usize,
    pub sentences: usize,
    pub mean_overlap: f64,
}

impl OverlapSummary {
    pub fn over(reports: &[ExplanationReport], k: usize) -> Self {
        let n = reports.len();
        let total: f64 = reports.iter().map(|r| r.overlap).sum();
        Self {
            k,
            sentences: n,
            mean_overlap: if n == 0 { 0.0 } else { total / n as f64 },
        }
    }
}
