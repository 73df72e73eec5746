//! Incoming-attention accumulation, a LIME-style surrogate, and their keyword overlap.

mod attention;
mod lime;
mod report;

pub use attention::{accumulate_attention, correlate, top_k, TokenScore, TopK};
pub use lime::{
    fit_weighted_ridge, kernel_weight, lime_explain, mask_distance, sample_masks, EncoderPredictor,
    LimeConfig, LimeResult, MaskedPredictor,
};
pub use report::{explain_sentence, ExplanationReport, OverlapSummary};
