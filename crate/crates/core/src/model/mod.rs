//! Encoder, its parameters and the cognitive fusions.

mod checkpoint;
mod config;
mod encoder;
mod input;
mod layers;
mod params;

pub use checkpoint::{config_sidecar, decode_tensors, encode_tensors};
pub use config::{AugmentationMode, ModelConfig};
pub use encoder::{AttentionTrace, Encoder, ForwardPass};
pub use input::ModelInput;
pub use layers::{classify, fuse_pooled, FusionNet};
pub use params::{is_decay_exempt, FusionIds, LayerIds, LinearIds, NormIds, ParamIds, COGNITIVE_TABLE_ROWS};
