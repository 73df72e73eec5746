use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::input::ModelInput;
use super::layers::{
    dropout_backward, dropout_forward, fuse_backward, fuse_forward, linear_backward,
    linear_forward, multi_head_attention, multi_head_attention_backward, AttentionCache,
    FusionCache, FusionNet,
};
use super::params::{build_params, Init, ParamIds, COGNITIVE_TABLE_ROWS};
use crate::error::{Error, Result};
use crate::numerics::{
    argmax, cross_entropy_with_grad, gelu, gelu_grad, grad_check, layer_norm_rows,
    layer_norm_rows_backward, softmax, GradCheckReport, LayerNormCache, ParamStore, SeededRng,
    Tensor2D,
};

/// Attention probabilities of one forward pass, indexed `[layer][head]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionTrace {
    pub layers: Vec<Vec<Tensor2D>>,
}

impl AttentionTrace {
    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn n_heads(&self) -> usize {
        self.layers.first().map_or(0, Vec::len)
    }

    pub fn get(&self, layer: usize, head: usize) -> &Tensor2D {
        &self.layers[layer][head]
    }

    pub fn matrices(&self) -> impl Iterator<Item = &Tensor2D> {
        self.layers.iter().flatten()
    }
}

#[derive(Debug, Clone)]
struct LayerCache {
    x: Tensor2D,
    attn: AttentionCache,
    attn_drop: Option<Vec<f64>>,
    norm1: LayerNormCache,
    h1: Tensor2D,
    f1: Tensor2D,
    g: Tensor2D,
    ff_drop: Option<Vec<f64>>,
    norm2: LayerNormCache,
}

/// Outputs and intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// Final hidden states, `max_len × d_model`.
    pub hidden: Tensor2D,
    /// Final hidden state at the CLS position.
    pub pooled: Vec<f64>,
    /// Classifier input after fusion.
    pub fused: Vec<f64>,
    pub logits: Vec<f64>,
    token_ids: Vec<usize>,
    eeg_tokens: Option<Vec<u8>>,
    eye_tokens: Option<Vec<u8>>,
    emb_norm: LayerNormCache,
    emb_drop: Option<Vec<f64>>,
    layers: Vec<LayerCache>,
    fusion: FusionCache,
}

impl ForwardPass {
    pub fn trace(&self) -> AttentionTrace {
        AttentionTrace {
            layers: self.layers.iter().map(|l| l.attn.probs.clone()).collect(),
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        softmax(&self.logits).expect("finite logits")
    }

    /// Argmax of the logits; ties go to the lowest class index.
    pub fn prediction(&self) -> usize {
        argmax(&self.logits)
    }
}

/// BERT-style encoder with a classification head and optional cognitive augmentations.
#[derive(Debug, Clone)]
pub struct Encoder {
    config: ModelConfig,
    params: ParamStore,
    ids: ParamIds,
}

fn check_token(what: &'static str, t: usize, len: usize) -> Result<()> {
    if t >= len {
        return Err(Error::Index { what, index: t, len });
    }
    Ok(())
}

impl Encoder {
    /// Normal(0, `init_std`) weights, zero biases, unit gammas.
    pub fn random(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = SeededRng::new(seed).derive("init");
        let std = config.init_std;
        let (params, ids) = build_params(&config, Init::Random(&mut rng, std))?;
        Ok(Self { config, params, ids })
    }

    /// All-zero tensors with the right names and shapes.
    pub(crate) fn zeroed(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let (params, ids) = build_params(&config, Init::Zeros)?;
        Ok(Self { config, params, ids })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn ids(&self) -> &ParamIds {
        &self.ids
    }

    /// Word + position (+ EEG-token) (+ eye-token) rows, before normalization.
    pub fn embed_sum(&self, input: &ModelInput) -> Result<Tensor2D> {
        embed_sum(&self.config, &self.ids, &self.params, input)
    }

    /// Normalized embeddings (no dropout).
    pub fn embed(&self, input: &ModelInput) -> Result<Tensor2D> {
        let sum = self.embed_sum(input)?;
        let n = self.ids.emb_norm;
        Ok(layer_norm_rows(
            &sum,
            self.params.value(n.gamma).data(),
            self.params.value(n.beta).data(),
            self.config.layer_norm_eps,
        )?
        .0)
    }

    /// One layer's attention block on `x`: projected context and per-head probabilities.
    pub fn self_attention(&self, layer: usize, x: &Tensor2D, mask: &[f64]) -> Result<(Tensor2D, Vec<Tensor2D>)> {
        let l = self
            .ids
            .layers
            .get(layer)
            .ok_or(Error::Index {
                what: "layer",
                index: layer,
                len: self.config.layers,
            })?;
        let cache = multi_head_attention(&self.params, l.query, l.key, l.value, self.config.heads, x, mask)?;
        let out = linear_forward(&cache.ctx, self.params.value(l.output.weight), self.params.value(l.output.bias))?;
        Ok((out, cache.probs))
    }

    /// Deterministic forward pass (no dropout).
    pub fn forward(&self, input: &ModelInput) -> Result<ForwardPass> {
        forward_impl(&self.config, &self.ids, &self.params, input, None)
    }

    /// Forward pass with dropout drawn from `rng` when the config enables it.
    pub fn forward_train(&self, input: &ModelInput, rng: &mut SeededRng) -> Result<ForwardPass> {
        forward_impl(&self.config, &self.ids, &self.params, input, Some(rng))
    }

    pub fn predict_proba(&self, input: &ModelInput) -> Result<Vec<f64>> {
        Ok(self.forward(input)?.probabilities())
    }

    pub fn predict(&self, input: &ModelInput) -> Result<usize> {
        Ok(self.forward(input)?.prediction())
    }

    /// Accumulates `d loss / d params` for one pass into the parameter grads.
    pub fn backward(&mut self, pass: &ForwardPass, dlogits: &[f64]) -> Result<()> {
        backward_impl(&self.config, &self.ids, &mut self.params, pass, dlogits)
    }

    /// Summed cross-entropy over `batch` without touching gradients.
    pub fn loss(&self, batch: &[(ModelInput, usize)]) -> Result<f64> {
        batch_loss(&self.config, &self.ids, &self.params, batch)
    }

    /// Finite-difference check of every parameter entry on the summed
    /// cross-entropy of `batch`. Dropout is disabled.
    pub fn grad_check(&mut self, batch: &[(ModelInput, usize)], eps: f64) -> Result<GradCheckReport> {
        self.params.zero_grad();
        for (input, label) in batch {
            let pass = self.forward(input)?;
            let (_, dlogits) = cross_entropy_with_grad(&pass.logits, *label)?;
            self.backward(&pass, &dlogits)?;
        }
        let mut store = std::mem::take(&mut self.params);
        let (cfg, ids) = (&self.config, &self.ids);
        let report = grad_check(&mut store, eps, |s| batch_loss(cfg, ids, s, batch));
        self.params = store;
        report
    }
}

fn batch_loss(cfg: &ModelConfig, ids: &ParamIds, store: &ParamStore, batch: &[(ModelInput, usize)]) -> Result<f64> {
    let mut total = 0.0;
    for (input, label) in batch {
        let pass = forward_impl(cfg, ids, store, input, None)?;
        total += crate::numerics::cross_entropy(&pass.logits, *label)?;
    }
    Ok(total)
}

fn embed_sum(cfg: &ModelConfig, ids: &ParamIds, store: &ParamStore, input: &ModelInput) -> Result<Tensor2D> {
    let n = input.max_len();
    if n != cfg.max_len {
        return Err(Error::Dimension {
            op: "embed",
            left: (n, cfg.d_model),
            right: (cfg.max_len, cfg.d_model),
        });
    }
    let word = store.value(ids.word_emb);
    let pos = store.value(ids.pos_emb);
    let mut out = Tensor2D::zeros(n, cfg.d_model);
    for i in 0..n {
        let t = input.layout.ids[i];
        check_token("word id", t, word.rows())?;
        let row = out.row_mut(i);
        for ((o, w), p) in row.iter_mut().zip(word.row(t)).zip(pos.row(i)) {
            *o = w + p;
        }
    }
    let tables = [
        (ids.eeg_emb, input.eeg_tokens.as_ref(), "EEG token"),
        (ids.eye_emb, input.eye_tokens.as_ref(), "eye token"),
    ];
    for (table, tokens, what) in tables {
        let Some(table) = table else { continue };
        let tokens = tokens.ok_or_else(|| Error::Validation(format!("mode {} needs {what}s", cfg.mode)))?;
        let tv = store.value(table);
        for (i, &t) in tokens.iter().enumerate() {
            check_token(what, t as usize, COGNITIVE_TABLE_ROWS)?;
            for (o, e) in out.row_mut(i).iter_mut().zip(tv.row(t as usize)) {
                *o += e;
            }
        }
    }
    Ok(out)
}

fn forward_impl(
    cfg: &ModelConfig,
    ids: &ParamIds,
    store: &ParamStore,
    input: &ModelInput,
    mut rng: Option<&mut SeededRng>,
) -> Result<ForwardPass> {
    let eps = cfg.layer_norm_eps;
    let p = cfg.dropout;
    let sum = embed_sum(cfg, ids, store, input)?;
    let (mut x, emb_norm) = layer_norm_rows(
        &sum,
        store.value(ids.emb_norm.gamma).data(),
        store.value(ids.emb_norm.beta).data(),
        eps,
    )?;
    let emb_drop = dropout_forward(&mut x, p, rng.as_deref_mut());

    let mut layers = Vec::with_capacity(cfg.layers);
    for l in &ids.layers {
        let attn = multi_head_attention(store, l.query, l.key, l.value, cfg.heads, &x, &input.mask)?;
        let mut a = linear_forward(&attn.ctx, store.value(l.output.weight), store.value(l.output.bias))?;
        let attn_drop = dropout_forward(&mut a, p, rng.as_deref_mut());
        a.add_assign(&x)?;
        let (h1, norm1) = layer_norm_rows(
            &a,
            store.value(l.attn_norm.gamma).data(),
            store.value(l.attn_norm.beta).data(),
            eps,
        )?;
        let f1 = linear_forward(&h1, store.value(l.ff_in.weight), store.value(l.ff_in.bias))?;
        let g = f1.map(gelu);
        let mut f2 = linear_forward(&g, store.value(l.ff_out.weight), store.value(l.ff_out.bias))?;
        let ff_drop = dropout_forward(&mut f2, p, rng.as_deref_mut());
        f2.add_assign(&h1)?;
        let (out, norm2) = layer_norm_rows(
            &f2,
            store.value(l.ff_norm.gamma).data(),
            store.value(l.ff_norm.beta).data(),
            eps,
        )?;
        layers.push(LayerCache {
            x: std::mem::replace(&mut x, out),
            attn,
            attn_drop,
            norm1,
            h1,
            f1,
            g,
            ff_drop,
            norm2,
        });
    }

    let pooled = x.row(0).to_vec();
    let net = ids.fusion.map(|f| FusionNet::from_store(store, f));
    let (fused, fusion) = fuse_forward(&pooled, input.sentence_eeg.as_deref(), cfg.mode, net.as_ref())?;
    let logits = super::layers::classify(
        &fused,
        store.value(ids.classifier.weight),
        store.value(ids.classifier.bias),
    )?;
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite logits".into()));
    }
    Ok(ForwardPass {
        hidden: x,
        pooled,
        fused,
        logits,
        token_ids: input.layout.ids.clone(),
        eeg_tokens: input.eeg_tokens.clone(),
        eye_tokens: input.eye_tokens.clone(),
        emb_norm,
        emb_drop,
        layers,
        fusion,
    })
}

fn backward_impl(
    cfg: &ModelConfig,
    ids: &ParamIds,
    store: &mut ParamStore,
    pass: &ForwardPass,
    dlogits: &[f64],
) -> Result<()> {
    if dlogits.len() != cfg.n_classes {
        return Err(Error::Dimension {
            op: "backward",
            left: (1, dlogits.len()),
            right: (1, cfg.n_classes),
        });
    }
    let dfused = linear_backward(
        store,
        ids.classifier,
        &Tensor2D::row_vector(&pass.fused),
        &Tensor2D::row_vector(dlogits),
    )?;
    let dpooled = fuse_backward(store, ids.fusion, cfg.mode, &pass.fusion, cfg.d_model, dfused.data())?;

    let mut dx = Tensor2D::zeros(cfg.max_len, cfg.d_model);
    dx.row_mut(0).copy_from_slice(&dpooled);

    for (l, c) in ids.layers.iter().zip(&pass.layers).rev() {
        // out = LN2(h1 + drop(ff_out(gelu(ff_in(h1)))))
        let (dz2, dg2, db2) = {
            let mut dg = vec![0.0; cfg.d_model];
            let mut db = vec![0.0; cfg.d_model];
            let dz = layer_norm_rows_backward(&dx, store.value(l.ff_norm.gamma).data(), &c.norm2, &mut dg, &mut db);
            (dz, dg, db)
        };
        accumulate(store, l.ff_norm.gamma, &dg2);
        accumulate(store, l.ff_norm.beta, &db2);
        let mut dh1 = dz2.clone();
        let mut df2 = dz2;
        dropout_backward(&mut df2, &c.ff_drop);
        let mut dg = linear_backward(store, l.ff_out, &c.g, &df2)?;
        for (d, z) in dg.data_mut().iter_mut().zip(c.f1.data()) {
            *d *= gelu_grad(*z);
        }
        dh1.add_assign(&linear_backward(store, l.ff_in, &c.h1, &dg)?)?;

        // h1 = LN1(x + drop(output(attention(x))))
        let mut dg1 = vec![0.0; cfg.d_model];
        let mut db1 = vec![0.0; cfg.d_model];
        let dz1 = layer_norm_rows_backward(&dh1, store.value(l.attn_norm.gamma).data(), &c.norm1, &mut dg1, &mut db1);
        accumulate(store, l.attn_norm.gamma, &dg1);
        accumulate(store, l.attn_norm.beta, &db1);
        let mut da = dz1.clone();
        dropout_backward(&mut da, &c.attn_drop);
        let dctx = linear_backward(store, l.output, &c.attn.ctx, &da)?;
        let mut dxin = multi_head_attention_backward(store, [l.query, l.key, l.value], cfg.heads, &c.x, &c.attn, &dctx)?;
        dxin.add_assign(&dz1)?;
        dx = dxin;
    }

    dropout_backward(&mut dx, &pass.emb_drop);
    let mut dg = vec![0.0; cfg.d_model];
    let mut db = vec![0.0; cfg.d_model];
    let de = layer_norm_rows_backward(&dx, store.value(ids.emb_norm.gamma).data(), &pass.emb_norm, &mut dg, &mut db);
    accumulate(store, ids.emb_norm.gamma, &dg);
    accumulate(store, ids.emb_norm.beta, &db);

    for i in 0..cfg.max_len {
        let row = de.row(i);
        add_row(store, ids.word_emb, pass.token_ids[i], row);
        add_row(store, ids.pos_emb, i, row);
        if let (Some(t), Some(tok)) = (ids.eeg_emb, &pass.eeg_tokens) {
            add_row(store, t, tok[i] as usize, row);
        }
        if let (Some(t), Some(tok)) = (ids.eye_emb, &pass.eye_tokens) {
            add_row(store, t, tok[i] as usize, row);
        }
    }
    Ok(())
}

fn accumulate(store: &mut ParamStore, id: crate::numerics::ParamId, delta: &[f64]) {
    for (g, d) in store.grad_mut(id).data_mut().iter_mut().zip(delta) {
        *g += d;
    }
}

fn add_row(store: &mut ParamStore, id: crate::numerics::ParamId, row: usize, delta: &[f64]) {
    for (g, d) in store.grad_mut(id).row_mut(row).iter_mut().zip(delta) {
        *g += d;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::CognitiveRecord;
    use crate::model::AugmentationMode;
    use crate::tokenizer::{Vocab, MASK_NEG, PAD_ID};
    use proptest::prelude::*;

    const WORDS: [&str; 5] = ["the", "prize", "went", "to", "curie"];

    fn vocab() -> Vocab {
        Vocab::build(&["the prize went to curie", "the award"], 1)
    }

    fn record() -> CognitiveRecord {
        CognitiveRecord {
            id: "s0".into(),
            tokens: WORDS.iter().map(|w| w.to_string()).collect(),
            label: 1,
            n_fixations: vec![1, 3, 0, 2, 2],
            eye_tokens: vec![10, 100, 0, 40, 55],
            eeg_tokens: vec![30, 80, 0, 100, 5],
            sentence_eeg: vec![1.2, -0.4, 1.7, 0.6],
        }
    }

    fn setup(mode: AugmentationMode, init_std: f64) -> (Encoder, ModelInput) {
        let cfg = ModelConfig {
            mode,
            init_std,
            ..ModelConfig::tiny()
        };
        let input = ModelInput::new(&WORDS, Some(&record()), &vocab(), &cfg).unwrap();
        (Encoder::random(cfg, 7).unwrap(), input)
    }

    #[test]
    fn embedding_sum_matches_table_lookups() {
        let (enc, input) = setup(AugmentationMode::BothEmbed, 0.02);
        let sum = enc.embed_sum(&input).unwrap();
        let p = enc.params();
        let table = |name: &str| p.value(p.find(name).unwrap());
        let eeg = input.eeg_tokens.as_ref().unwrap();
        let eye = input.eye_tokens.as_ref().unwrap();
        for i in 0..enc.config().max_len {
            for k in 0..enc.config().d_model {
                let want = table("embeddings.word").get(input.layout.ids[i], k)
                    + table("embeddings.position").get(i, k)
                    + table("embeddings.eeg_token").get(eeg[i] as usize, k)
                    + table("embeddings.eye_token").get(eye[i] as usize, k);
                assert!((sum.get(i, k) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trace_rows_are_distributions_without_pad_mass() {
        for mode in [AugmentationMode::None, AugmentationMode::CogMask] {
            let (enc, input) = setup(mode, 0.5);
            let trace = enc.forward(&input).unwrap().trace();
            assert_eq!(trace.n_layers(), 2);
            assert_eq!(trace.n_heads(), 2);
            for a in trace.matrices() {
                assert_eq!(a.shape(), (16, 16));
                for i in 0..16 {
                    let s: f64 = a.row(i).iter().sum();
                    assert!((s - 1.0).abs() < 1e-9);
                    for j in 0..16 {
                        if input.mask[j] == MASK_NEG {
                            assert!(a.get(i, j) < 1e-4);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cognitive_mask_blocks_skimmed_words() {
        let (enc, input) = setup(AugmentationMode::CogMask, 0.5);
        // "the" (one fixation) and "went" (none) are masked, as is padding
        let masked: Vec<usize> = (0..16).filter(|&j| input.mask[j] == MASK_NEG).collect();
        assert_eq!(&masked[..3], [1, 3, 7]);
        assert_eq!(input.mask[..7], [0.0, MASK_NEG, 0.0, MASK_NEG, 0.0, 0.0, 0.0]);
        let trace = enc.forward(&input).unwrap().trace();
        for a in trace.matrices() {
            for i in 0..16 {
                assert_eq!(a.get(i, 1), 0.0);
                assert_eq!(a.get(i, 3), 0.0);
            }
        }
    }

    #[test]
    fn zero_queries_give_uniform_attention() {
        let (mut enc, input) = setup(AugmentationMode::None, 0.3);
        for l in enc.ids().layers.clone() {
            enc.params_mut().get_mut(l.query.weight).value.zero_();
            enc.params_mut().get_mut(l.query.bias).value.zero_();
        }
        let real = input.layout.real_len();
        assert_eq!(real, 7);
        for a in enc.forward(&input).unwrap().trace().matrices() {
            for i in 0..16 {
                for j in 0..16 {
                    let want = if j < real { 1.0 / real as f64 } else { 0.0 };
                    assert!((a.get(i, j) - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let (enc, input) = setup(AugmentationMode::PoolConcatNn, 0.02);
        let (again, _) = setup(AugmentationMode::PoolConcatNn, 0.02);
        let a = enc.forward(&input).unwrap();
        let b = again.forward(&input).unwrap();
        assert_eq!(a.logits, b.logits);
        assert_eq!(a.trace(), b.trace());
        assert_eq!(a.fused.len(), 32);
        assert_eq!(a.pooled, a.hidden.row(0));
    }

    #[test]
    fn different_seeds_differ() {
        let cfg = ModelConfig::tiny();
        let a = Encoder::random(cfg.clone(), 1).unwrap();
        let b = Encoder::random(cfg, 2).unwrap();
        assert_ne!(a.params().iter().next().unwrap().value, b.params().iter().next().unwrap().value);
    }

    #[test]
    fn missing_features_are_rejected() {
        let cfg = ModelConfig {
            mode: AugmentationMode::EegEmbed,
            ..ModelConfig::tiny()
        };
        assert!(ModelInput::new(&WORDS, None, &vocab(), &cfg).is_err());
        let plain = ModelInput::new(&WORDS, None, &vocab(), &ModelConfig::tiny()).unwrap();
        let enc = Encoder::random(cfg, 3).unwrap();
        assert!(enc.forward(&plain).is_err());
    }

    #[test]
    fn padding_tokens_do_not_change_predictions() {
        // Masked PAD keys cannot leak into real positions.
        let (enc, input) = setup(AugmentationMode::None, 0.3);
        let base = enc.forward(&input).unwrap().logits;
        let mut other = input.clone();
        for j in input.layout.real_len()..16 {
            assert_eq!(other.layout.ids[j], PAD_ID);
            other.layout.ids[j] = 5;
        }
        let moved = enc.forward(&other).unwrap().logits;
        for (a, b) in base.iter().zip(&moved) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences_for_every_mode() {
        let vocab = vocab();
        for mode in AugmentationMode::ALL {
            let cfg = ModelConfig {
                mode,
                init_std: 0.3,
                ..ModelConfig::tiny()
            };
            let mut second = record();
            second.id = "s1".into();
            second.tokens.truncate(3);
            second.n_fixations = vec![2, 0, 1];
            second.eye_tokens = vec![70, 0, 20];
            second.eeg_tokens = vec![1, 0, 99];
            second.sentence_eeg = vec![1.3, 0.5, 2.0, 0.9];
            let batch = vec![
                (ModelInput::new(&WORDS, Some(&record()), &vocab, &cfg).unwrap(), 1),
                (ModelInput::new(&WORDS[..3], Some(&second), &vocab, &cfg).unwrap(), 2),
            ];
            let mut enc = Encoder::random(cfg, 5).unwrap();
            let report = enc.grad_check(&batch, 1e-5).unwrap();
            assert!(
                report.max_rel_error < 1e-4,
                "{mode}: {:?}",
                report.failing(1e-4)
            );
            assert_eq!(report.entries_checked, enc.params().numel());
        }
    }

    #[test]
    fn dropout_backward_matches_finite_differences() {
        let (mut enc, input) = setup(AugmentationMode::PoolAddNn, 0.3);
        enc.config.dropout = 0.3;
        let label = 2;
        enc.params.zero_grad();
        let pass = enc.forward_train(&input, &mut SeededRng::new(9)).unwrap();
        let (_, dl) = cross_entropy_with_grad(&pass.logits, label).unwrap();
        enc.backward(&pass, &dl).unwrap();
        let mut store = std::mem::take(&mut enc.params);
        let (cfg, ids) = (&enc.config, &enc.ids);
        let report = grad_check(&mut store, 1e-5, |s| {
            let p = forward_impl(cfg, ids, s, &input, Some(&mut SeededRng::new(9)))?;
            crate::numerics::cross_entropy(&p.logits, label)
        })
        .unwrap();
        assert!(report.max_rel_error < 1e-4, "{:?}", report.failing(1e-4));
        assert_ne!(pass.logits, enc_forward_logits(cfg, ids, &store, &input));
    }

    fn enc_forward_logits(cfg: &ModelConfig, ids: &ParamIds, s: &ParamStore, input: &ModelInput) -> Vec<f64> {
        forward_impl(cfg, ids, s, input, None).unwrap().logits
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn shifting_every_logit_keeps_the_prediction(shift in -50.0f64..50.0) {
            let (mut enc, input) = setup(AugmentationMode::None, 0.3);
            let before = enc.forward(&input).unwrap();
            let b = enc.ids().classifier.bias;
            let bias = &mut enc.params_mut().get_mut(b).value;
            *bias = bias.map(|v| v + shift);
            let after = enc.forward(&input).unwrap();
            prop_assert_eq!(before.prediction(), after.prediction());
            for (p, q) in before.probabilities().iter().zip(after.probabilities()) {
                prop_assert!((p - q).abs() < 1e-9);
            }
        }
    }
}
