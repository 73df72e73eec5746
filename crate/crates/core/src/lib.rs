//! Compact BERT-style sentence classifier with eye-tracking and EEG feature
//! augmentations, a fine-tuning/evaluation protocol, and two explainers
//! (incoming-attention accumulation and a LIME-style surrogate).

pub mod cli;
pub mod dataset;
pub mod error;
pub mod explain;
pub mod features;
pub mod io;
pub mod model;
pub mod numerics;
pub mod tokenizer;
pub mod training;

pub use error::{Error, Result};
