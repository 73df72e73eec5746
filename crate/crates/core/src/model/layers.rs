//! Affine, dropout, attention and fusion building blocks with their backward passes.

use super::config::AugmentationMode;
use super::params::{FusionIds, LinearIds};
use crate::error::{Error, Result};
use crate::numerics::{
    gelu, gelu_grad, matmul, matmul_nt, matmul_tn, softmax_rows, softmax_rows_backward,
    ParamStore, SeededRng, Tensor2D,
};

pub(crate) fn linear_forward(x: &Tensor2D, w: &Tensor2D, b: &Tensor2D) -> Result<Tensor2D> {
    let mut y = matmul(x, w)?;
    y.add_row_broadcast(b.data())?;
    Ok(y)
}

/// Accumulates weight and bias gradients and returns `dx`.
pub(crate) fn linear_backward(
    store: &mut ParamStore,
    ids: LinearIds,
    x: &Tensor2D,
    dy: &Tensor2D,
) -> Result<Tensor2D> {
    let dw = matmul_tn(x, dy)?;
    store.grad_mut(ids.weight).add_assign(&dw)?;
    let db = dy.column_sums();
    for (g, d) in store.grad_mut(ids.bias).data_mut().iter_mut().zip(&db) {
        *g += d;
    }
    matmul_nt(dy, store.value(ids.weight))
}

/// Inverted dropout; returns the per-entry scale (0 or `1/(1-p)`) or `None`
/// when nothing was dropped.
pub(crate) fn dropout_forward(x: &mut Tensor2D, p: f64, rng: Option<&mut SeededRng>) -> Option<Vec<f64>> {
    let rng = rng?;
    if p <= 0.0 {
        return None;
    }
    let keep = 1.0 / (1.0 - p);
    let scale: Vec<f64> = (0..x.data().len())
        .map(|_| if rng.bernoulli(p) { 0.0 } else { keep })
        .collect();
    for (v, s) in x.data_mut().iter_mut().zip(&scale) {
        *v *= s;
    }
    Some(scale)
}

pub(crate) fn dropout_backward(d: &mut Tensor2D, scale: &Option<Vec<f64>>) {
    if let Some(scale) = scale {
        for (v, s) in d.data_mut().iter_mut().zip(scale) {
            *v *= s;
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct AttentionCache {
    pub q: Tensor2D,
    pub k: Tensor2D,
    pub v: Tensor2D,
    pub probs: Vec<Tensor2D>,
    pub ctx: Tensor2D,
}

/// Multi-head scaled dot-product attention over `x` with an additive key mask.
/// Returns the head outputs concatenated (before the output projection).
pub(crate) fn multi_head_attention(
    store: &ParamStore,
    query: LinearIds,
    key: LinearIds,
    value: LinearIds,
    heads: usize,
    x: &Tensor2D,
    mask: &[f64],
) -> Result<AttentionCache> {
    if mask.len() != x.rows() {
        return Err(Error::Dimension {
            op: "attention mask",
            left: x.shape(),
            right: (1, mask.len()),
        });
    }
    let q = linear_forward(x, store.value(query.weight), store.value(query.bias))?;
    let k = linear_forward(x, store.value(key.weight), store.value(key.bias))?;
    let v = linear_forward(x, store.value(value.weight), store.value(value.bias))?;
    let dk = x.cols() / heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let mut ctx = Tensor2D::zeros(x.rows(), x.cols());
    let mut probs = Vec::with_capacity(heads);
    for h in 0..heads {
        let (qh, kh, vh) = (q.col_slice(h * dk, dk), k.col_slice(h * dk, dk), v.col_slice(h * dk, dk));
        let mut scores = matmul_nt(&qh, &kh)?;
        for r in 0..scores.rows() {
            for (s, m) in scores.row_mut(r).iter_mut().zip(mask) {
                *s = *s * scale + m;
            }
        }
        let p = softmax_rows(&scores)?;
        ctx.set_col_slice(h * dk, &matmul(&p, &vh)?);
        probs.push(p);
    }
    Ok(AttentionCache { q, k, v, probs, ctx })
}

/// Backward through the heads and the Q/K/V projections; returns `dx`.
pub(crate) fn multi_head_attention_backward(
    store: &mut ParamStore,
    ids: [LinearIds; 3],
    heads: usize,
    x: &Tensor2D,
    cache: &AttentionCache,
    dctx: &Tensor2D,
) -> Result<Tensor2D> {
    let dk = x.cols() / heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let mut dq = Tensor2D::zeros(x.rows(), x.cols());
    let mut dkk = Tensor2D::zeros(x.rows(), x.cols());
    let mut dv = Tensor2D::zeros(x.rows(), x.cols());
    for h in 0..heads {
        let (qh, kh, vh) = (
            cache.q.col_slice(h * dk, dk),
            cache.k.col_slice(h * dk, dk),
            cache.v.col_slice(h * dk, dk),
        );
        let p = &cache.probs[h];
        let dch = dctx.col_slice(h * dk, dk);
        let dp = matmul_nt(&dch, &vh)?;
        dv.set_col_slice(h * dk, &matmul_tn(p, &dch)?);
        let mut ds = softmax_rows_backward(p, &dp);
        ds.scale(scale);
        dq.set_col_slice(h * dk, &matmul(&ds, &kh)?);
        dkk.set_col_slice(h * dk, &matmul_tn(&ds, &qh)?);
    }
    let [query, key, value] = ids;
    let mut dx = linear_backward(store, query, x, &dq)?;
    dx.add_assign(&linear_backward(store, key, x, &dkk)?)?;
    dx.add_assign(&linear_backward(store, value, x, &dv)?)?;
    Ok(dx)
}

/// Weights of the three-layer EEG network, `C → d → d → d`.
#[derive(Debug, Clone, Copy)]
pub struct FusionNet<'a> {
    pub l1: (&'a Tensor2D, &'a Tensor2D),
    pub l2: (&'a Tensor2D, &'a Tensor2D),
    pub l3: (&'a Tensor2D, &'a Tensor2D),
}

impl<'a> FusionNet<'a> {
    pub(crate) fn from_store(store: &'a ParamStore, ids: FusionIds) -> Self {
        let pair = |l: LinearIds| (store.value(l.weight), store.value(l.bias));
        Self {
            l1: pair(ids.l1),
            l2: pair(ids.l2),
            l3: pair(ids.l3),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct FusionNetCache {
    x: Tensor2D,
    z1: Tensor2D,
    h1: Tensor2D,
    z2: Tensor2D,
    h2: Tensor2D,
}

/// GELU after the first two layers, linear third layer.
pub(crate) fn fusion_net_forward(net: &FusionNet, eeg: &[f64]) -> Result<(Vec<f64>, FusionNetCache)> {
    let x = Tensor2D::row_vector(eeg);
    let z1 = linear_forward(&x, net.l1.0, net.l1.1)?;
    let h1 = z1.map(gelu);
    let z2 = linear_forward(&h1, net.l2.0, net.l2.1)?;
    let h2 = z2.map(gelu);
    let out = linear_forward(&h2, net.l3.0, net.l3.1)?;
    Ok((out.into_vec(), FusionNetCache { x, z1, h1, z2, h2 }))
}

pub(crate) fn fusion_net_backward(
    store: &mut ParamStore,
    ids: FusionIds,
    cache: &FusionNetCache,
    dout: &[f64],
) -> Result<()> {
    let dout = Tensor2D::row_vector(dout);
    let dh2 = linear_backward(store, ids.l3, &cache.h2, &dout)?;
    let dz2 = Tensor2D::from_vec(
        1,
        dh2.cols(),
        dh2.data().iter().zip(cache.z2.data()).map(|(d, z)| d * gelu_grad(*z)).collect(),
    )?;
    let dh1 = linear_backward(store, ids.l2, &cache.h1, &dz2)?;
    let dz1 = Tensor2D::from_vec(
        1,
        dh1.cols(),
        dh1.data().iter().zip(cache.z1.data()).map(|(d, z)| d * gelu_grad(*z)).collect(),
    )?;
    // The EEG vector is an input, so its gradient is dropped.
    linear_backward(store, ids.l1, &cache.x, &dz1)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub(crate) struct FusionCache {
    pub net: Option<FusionNetCache>,
    /// `Σ eeg / d_model` for the multiply fusion.
    pub multiplier: f64,
}

pub(crate) fn fuse_forward(
    pooled: &[f64],
    sent_eeg: Option<&[f64]>,
    mode: AugmentationMode,
    net: Option<&FusionNet>,
) -> Result<(Vec<f64>, FusionCache)> {
    let d = pooled.len();
    let mut cache = FusionCache {
        net: None,
        multiplier: 0.0,
    };
    if !mode.uses_sentence_eeg() {
        return Ok((pooled.to_vec(), cache));
    }
    let eeg = sent_eeg.ok_or_else(|| Error::Validation(format!("mode {mode} needs sentence EEG")))?;
    let mut run_net = || -> Result<Vec<f64>> {
        let net = net.ok_or_else(|| Error::Validation(format!("mode {mode} needs fusion weights")))?;
        if net.l1.0.rows() != eeg.len() {
            return Err(Error::Dimension {
                op: "fusion net",
                left: net.l1.0.shape(),
                right: (1, eeg.len()),
            });
        }
        if net.l3.0.cols() != d {
            return Err(Error::Dimension {
                op: "fusion net output",
                left: net.l3.0.shape(),
                right: (1, d),
            });
        }
        let (out, c) = fusion_net_forward(net, eeg)?;
        cache.net = Some(c);
        Ok(out)
    };
    let fused = match mode {
        AugmentationMode::PoolConcat => [pooled, eeg].concat(),
        AugmentationMode::PoolConcatNn => {
            let n = run_net()?;
            [pooled, &n[..]].concat()
        }
        AugmentationMode::PoolAddNn => {
            let n = run_net()?;
            pooled.iter().zip(&n).map(|(p, x)| p + x).collect()
        }
        AugmentationMode::PoolMultiply => {
            let m = eeg.iter().sum::<f64>() / d as f64;
            cache.multiplier = m;
            pooled.iter().map(|p| p * m).collect()
        }
        _ => unreachable!("non-pool modes returned above"),
    };
    Ok((fused, cache))
}

/// Returns `d pooled`; fusion-net gradients go into `store`.
pub(crate) fn fuse_backward(
    store: &mut ParamStore,
    ids: Option<FusionIds>,
    mode: AugmentationMode,
    cache: &FusionCache,
    d_model: usize,
    dfused: &[f64],
) -> Result<Vec<f64>> {
    match mode {
        AugmentationMode::PoolConcat => Ok(dfused[..d_model].to_vec()),
        AugmentationMode::PoolConcatNn => {
            fusion_net_backward(store, ids.expect("fusion ids"), cache.net.as_ref().expect("cache"), &dfused[d_model..])?;
            Ok(dfused[..d_model].to_vec())
        }
        AugmentationMode::PoolAddNn => {
            fusion_net_backward(store, ids.expect("fusion ids"), cache.net.as_ref().expect("cache"), dfused)?;
            Ok(dfused.to_vec())
        }
        AugmentationMode::PoolMultiply => Ok(dfused.iter().map(|g| g * cache.multiplier).collect()),
        _ => Ok(dfused.to_vec()),
    }
}

/// Combines the pooled vector with sentence EEG according to `mode`.
/// Non-pool modes return `pooled` unchanged.
pub fn fuse_pooled(
    pooled: &[f64],
    sent_eeg: &[f64],
    mode: AugmentationMode,
    net: Option<&FusionNet>,
) -> Result<Vec<f64>> {
    fuse_forward(pooled, Some(sent_eeg), mode, net).map(|(f, _)| f)
}

/// Affine classifier head: `fused · W + b`.
pub fn classify(fused: &[f64], weight: &Tensor2D, bias: &Tensor2D) -> Result<Vec<f64>> {
    if weight.rows() != fused.len() || bias.cols() != weight.cols() {
        return Err(Error::Dimension {
            op: "classify",
            left: (1, fused.len()),
            right: weight.shape(),
        });
    }
    Ok(linear_forward(&Tensor2D::row_vector(fused), weight, bias)?.into_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiply_fusion_examples() {
        let out = fuse_pooled(&[1.0, 2.0], &[0.5, 0.5, 1.0], AugmentationMode::PoolMultiply, None).unwrap();
        assert_eq!(out, [1.0, 2.0]);
        let out = fuse_pooled(&[1.0, 2.0], &[0.0; 3], AugmentationMode::PoolMultiply, None).unwrap();
        assert_eq!(out, [0.0, 0.0]);
    }

    #[test]
    fn concat_fusion_and_passthrough() {
        let out = fuse_pooled(&[1.0, 2.0], &[3.0], AugmentationMode::PoolConcat, None).unwrap();
        assert_eq!(out, [1.0, 2.0, 3.0]);
        let out = fuse_pooled(&[1.0, 2.0], &[3.0], AugmentationMode::EegEmbed, None).unwrap();
        assert_eq!(out, [1.0, 2.0]);
        assert!(fuse_pooled(&[1.0], &[3.0], AugmentationMode::PoolAddNn, None).is_err());
    }

    #[test]
    fn classify_examples() {
        let b = Tensor2D::row_vector(&[0.5, -1.0, 2.0]);
        let logits = classify(&[3.0, 4.0], &Tensor2D::zeros(2, 3), &b).unwrap();
        assert_eq!(logits, [0.5, -1.0, 2.0]);
        let w = Tensor2D::identity(2);
        let logits = classify(&[3.0, 4.0], &w, &Tensor2D::row_vector(&[1.0, 0.0])).unwrap();
        assert_eq!(logits, [4.0, 4.0]);
        assert_eq!(crate::numerics::argmax(&logits), 0);
        assert!(classify(&[1.0], &w, &Tensor2D::zeros(1, 2)).is_err());
    }
}
