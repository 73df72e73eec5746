use super::config::ModelConfig;
use crate::error::Result;
use crate::features::MAX_TOKEN;
use crate::numerics::{ParamId, ParamStore, SeededRng, Tensor2D};

/// Rows of the EEG-token and eye-token embedding tables.
pub const COGNITIVE_TABLE_ROWS: usize = MAX_TOKEN as usize + 1;

#[derive(Debug, Clone, Copy)]
pub struct LinearIds {
    pub weight: ParamId,
    pub bias: ParamId,
}

#[derive(Debug, Clone, Copy)]
pub struct NormIds {
    pub gamma: ParamId,
    pub beta: ParamId,
}

#[derive(Debug, Clone)]
pub struct LayerIds {
    pub query: LinearIds,
    pub key: LinearIds,
    pub value: LinearIds,
    pub output: LinearIds,
    pub attn_norm: NormIds,
    pub ff_in: LinearIds,
    pub ff_out: LinearIds,
    pub ff_norm: NormIds,
}

/// Three-layer network lifting sentence EEG to `d_model`.
#[derive(Debug, Clone, Copy)]
pub struct FusionIds {
    pub l1: LinearIds,
    pub l2: LinearIds,
    pub l3: LinearIds,
}

/// Handles to every tensor of an encoder, in creation order.
#[derive(Debug, Clone)]
pub struct ParamIds {
    pub word_emb: ParamId,
    pub pos_emb: ParamId,
    pub eeg_emb: Option<ParamId>,
    pub eye_emb: Option<ParamId>,
    pub emb_norm: NormIds,
    pub layers: Vec<LayerIds>,
    pub fusion: Option<FusionIds>,
    pub classifier: LinearIds,
}

/// How fresh tensors are filled.
pub(crate) enum Init<'a> {
    Random(&'a mut SeededRng, f64),
    Zeros,
}

impl Init<'_> {
    fn weight(&mut self, rows: usize, cols: usize) -> Tensor2D {
        match self {
            Init::Random(rng, std) => {
                let data = (0..rows * cols).map(|_| rng.normal(0.0, *std)).collect();
                Tensor2D::from_vec(rows, cols, data).expect("shape")
            }
            Init::Zeros => Tensor2D::zeros(rows, cols),
        }
    }
}

fn linear(store: &mut ParamStore, init: &mut Init, name: &str, i: usize, o: usize) -> Result<LinearIds> {
    Ok(LinearIds {
        weight: store.add(format!("{name}.weight"), init.weight(i, o))?,
        bias: store.add(format!("{name}.bias"), Tensor2D::zeros(1, o))?,
    })
}

fn norm(store: &mut ParamStore, name: &str, d: usize) -> Result<NormIds> {
    Ok(NormIds {
        gamma: store.add(format!("{name}.gamma"), Tensor2D::fill(1, d, 1.0))?,
        beta: store.add(format!("{name}.beta"), Tensor2D::zeros(1, d))?,
    })
}

/// Normal(0, std) weights and embeddings, zero biases, unit gammas.
pub(crate) fn build_params(cfg: &ModelConfig, mut init: Init) -> Result<(ParamStore, ParamIds)> {
    let d = cfg.d_model;
    let mut s = ParamStore::new();
    let word_emb = s.add("embeddings.word", init.weight(cfg.vocab_size, d))?;
    let pos_emb = s.add("embeddings.position", init.weight(cfg.max_len, d))?;
    let eeg_emb = if cfg.mode.uses_eeg_tokens() {
        Some(s.add("embeddings.eeg_token", init.weight(COGNITIVE_TABLE_ROWS, d))?)
    } else {
        None
    };
    let eye_emb = if cfg.mode.uses_eye_tokens() {
        Some(s.add("embeddings.eye_token", init.weight(COGNITIVE_TABLE_ROWS, d))?)
    } else {
        None
    };
    let emb_norm = norm(&mut s, "embeddings.norm", d)?;
    let mut layers = Vec::with_capacity(cfg.layers);
    for l in 0..cfg.layers {
        let p = format!("layer{l}");
        layers.push(LayerIds {
            query: linear(&mut s, &mut init, &format!("{p}.attention.query"), d, d)?,
            key: linear(&mut s, &mut init, &format!("{p}.attention.key"), d, d)?,
            value: linear(&mut s, &mut init, &format!("{p}.attention.value"), d, d)?,
            output: linear(&mut s, &mut init, &format!("{p}.attention.output"), d, d)?,
            attn_norm: norm(&mut s, &format!("{p}.attention.norm"), d)?,
            ff_in: linear(&mut s, &mut init, &format!("{p}.ff.in"), d, cfg.d_ff)?,
            ff_out: linear(&mut s, &mut init, &format!("{p}.ff.out"), cfg.d_ff, d)?,
            ff_norm: norm(&mut s, &format!("{p}.ff.norm"), d)?,
        });
    }
    let fusion = if cfg.mode.has_fusion_net() {
        Some(FusionIds {
            l1: linear(&mut s, &mut init, "fusion.l1", cfg.eeg_channels, d)?,
            l2: linear(&mut s, &mut init, "fusion.l2", d, d)?,
            l3: linear(&mut s, &mut init, "fusion.l3", d, d)?,
        })
    } else {
        None
    };
    let classifier = linear(&mut s, &mut init, "classifier", cfg.classifier_input_dim(), cfg.n_classes)?;
    Ok((
        s,
        ParamIds {
            word_emb,
            pos_emb,
            eeg_emb,
            eye_emb,
            emb_norm,
            layers,
            fusion,
            classifier,
        },
    ))
}

/// Parameters exempt from weight decay: biases and layer-norm gains/shifts.
pub fn is_decay_exempt(name: &str) -> bool {
    name.ends_with(".bias") || name.ends_with(".gamma") || name.ends_with(".beta")
}
