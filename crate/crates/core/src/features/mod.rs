//! Cognitive features: raw measurements, token formulas, the per-sentence
//! feature database, the word-EEG lexicon and a synthetic corpus generator.

mod db;
mod lexicon;
mod measurements;
mod synth;
mod tokens;

pub use db::{derive_feature_db, CognitiveRecord, FeatureDb};
pub use lexicon::{build_lexicon, lexicon_sentence_eeg, EegLexicon, LexiconEntry, LexiconSentence};
pub use measurements::{
    SentenceMeasurements, WordEEG, WordFixation, WordMeasurement, BAND_COUNT, BAND_NAMES,
    FRP_COUNT, FRP_NAMES,
};
pub use synth::{
    synth_generate, EegModel, FixationModel, SynthConfig, SynthCorpus, SynthMeta, RELATION_TYPES,
};
pub use tokens::{
    cognitive_mask, column_mean, eeg_token_raw, eye_token_raw, scale_eeg_tokens, scale_eye_tokens,
    sentence_eeg, word_eeg_vector, MAX_TOKEN,
};
