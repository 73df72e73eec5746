use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::attention::TokenScore;
use crate::error::{Error, Result};
use crate::features::CognitiveRecord;
use crate::model::{Encoder, ModelInput};
use crate::numerics::{argmax, solve, SeededRng, Tensor2D};
use crate::tokenizer::Vocab;

/// Class probabilities for a sentence with some words removed.
pub trait MaskedPredictor: Sync {
    /// `keep[i]` says whether word `i` stays in the sentence.
    fn predict_masked(&self, keep: &[bool]) -> Result<Vec<f64>>;
}

impl<F> MaskedPredictor for F
where
    F: Fn(&[bool]) -> Result<Vec<f64>> + Sync,
{
    fn predict_masked(&self, keep: &[bool]) -> Result<Vec<f64>> {
        self(keep)
    }
}

/// An encoder applied to one sentence; removed words take their cognitive
/// features with them.
pub struct EncoderPredictor<'a> {
    pub encoder: &'a Encoder,
    pub vocab: &'a Vocab,
    pub words: &'a [String],
    pub record: Option<&'a CognitiveRecord>,
}

impl MaskedPredictor for EncoderPredictor<'_> {
    fn predict_masked(&self, keep: &[bool]) -> Result<Vec<f64>> {
        let pick = |i: usize| keep.get(i).copied().unwrap_or(true);
        let words: Vec<&String> = self.words.iter().enumerate().filter(|(i, _)| pick(*i)).map(|(_, w)| w).collect();
        let record = self.record.map(|r| {
            let sub = |v: &[u8]| v.iter().enumerate().filter(|(i, _)| pick(*i)).map(|(_, x)| *x).collect();
            CognitiveRecord {
                id: r.id.clone(),
                tokens: words.iter().map(|w| w.to_string()).collect(),
                label: r.label,
                n_fixations: r.n_fixations.iter().enumerate().filter(|(i, _)| pick(*i)).map(|(_, x)| *x).collect(),
                eye_tokens: sub(&r.eye_tokens),
                eeg_tokens: sub(&r.eeg_tokens),
                sentence_eeg: r.sentence_eeg.clone(),
            }
        });
        let input = ModelInput::new(&words, record.as_ref(), self.vocab, self.encoder.config())?;
        self.encoder.predict_proba(&input)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimeConfig {
    /// Perturbed samples, counting the unperturbed sentence.
    pub n_samples: usize,
    /// Kernel width on the 0–100 distance scale.
    pub sigma: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        Self {
            n_samples: 200,
            sigma: 25.0,
            lambda: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeResult {
    /// One coefficient per word, at token position `word index + 1`.
    pub scores: Vec<TokenScore>,
    pub intercept: f64,
    pub target_class: usize,
    pub base_probability: f64,
}

/// Cosine distance between a presence mask with `kept` ones and the all-ones mask.
pub fn mask_distance(kept: usize, total: usize) -> f64 {
    1.0 - (kept as f64 / total as f64).sqrt()
}

pub fn kernel_weight(distance: f64, sigma: f64) -> f64 {
    (-(100.0 * distance).powi(2) / (sigma * sigma)).exp()
}

/// Weighted ridge of `y` on the indicator columns of `masks` with an
/// unpenalized intercept. Weights are normalized to sum 1 first, so repeating
/// every sample the same number of times leaves the fit unchanged.
/// Returns `(intercept, coefficients)`.
pub fn fit_weighted_ridge(masks: &[Vec<bool>], y: &[f64], weights: &[f64], lambda: f64) -> Result<(f64, Vec<f64>)> {
    let n = masks.len();
    if n == 0 || y.len() != n || weights.len() != n {
        return Err(Error::Validation("ridge fit needs matching non-empty inputs".into()));
    }
    let m = masks[0].len();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numeric("sample weights sum to zero".into()));
    }
    let p = m + 1;
    let mut a = Tensor2D::zeros(p, p);
    let mut b = vec![0.0; p];
    let mut x = vec![0.0; p];
    for ((mask, &yi), &wi) in masks.iter().zip(y).zip(weights) {
        let w = wi / total;
        x[0] = 1.0;
        for (xj, &keep) in x[1..].iter_mut().zip(mask) {
            *xj = if keep { 1.0 } else { 0.0 };
        }
        for r in 0..p {
            if x[r] == 0.0 {
                continue;
            }
            b[r] += w * x[r] * yi;
            for c in 0..p {
                a.set(r, c, a.get(r, c) + w * x[r] * x[c]);
            }
        }
    }
    for j in 1..p {
        a.set(j, j, a.get(j, j) + lambda);
    }
    let beta = solve(&a, &b)?;
    Ok((beta[0], beta[1..].to_vec()))
}

/// Masks for LIME: the all-kept mask first, then independent draws that keep
/// each word with probability 0.5 (all-removed draws are redrawn).
pub fn sample_masks(n_words: usize, n_samples: usize, seed: u64) -> Vec<Vec<bool>> {
    let mut rng = SeededRng::new(seed).derive("lime");
    let mut masks = vec![vec![true; n_words]];
    while masks.len() < n_samples {
        let m: Vec<bool> = (0..n_words).map(|_| rng.bernoulli(0.5)).collect();
        if m.iter().any(|&k| k) {
            masks.push(m);
        }
    }
    masks
}

/// Local linear surrogate of the predicted-class probability over word presence.
pub fn lime_explain(model: &dyn MaskedPredictor, words: &[String], cfg: &LimeConfig) -> Result<LimeResult> {
    let m = words.len();
    if m == 0 {
        return Err(Error::Validation("LIME needs at least one word".into()));
    }
    if cfg.n_samples < 10 {
        return Err(Error::Config("LIME needs at least 10 samples".into()));
    }
    if !(cfg.sigma > 0.0) || !(cfg.lambda > 0.0) {
        return Err(Error::Config("LIME sigma and lambda must be positive".into()));
    }
    let masks = sample_masks(m, cfg.n_samples, cfg.seed);
    let probs = masks
        .par_iter()
        .map(|mask| model.predict_masked(mask))
        .collect::<Result<Vec<_>>>()?;
    let target = argmax(&probs[0]);
    let y: Vec<f64> = probs
        .iter()
        .map(|p| {
            p.get(target).copied().ok_or(Error::Index {
                what: "class",
                index: target,
                len: p.len(),
            })
        })
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = masks
        .iter()
        .map(|mask| kernel_weight(mask_distance(mask.iter().filter(|&&k| k).count(), m), cfg.sigma))
        .collect();
    let (intercept, coef) = fit_weighted_ridge(&masks, &y, &weights, cfg.lambda)?;
    Ok(LimeResult {
        scores: coef
            .into_iter()
            .enumerate()
            .map(|(i, score)| TokenScore {
                position: i + 1,
                word: words[i].clone(),
                score,
            })
            .collect(),
        intercept,
        target_class: target,
        base_probability: y[0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("w{i}")).collect()
    }

    fn sigmoid(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn kernel_values() {
        assert_eq!(mask_distance(4, 4), 0.0);
        assert_eq!(kernel_weight(0.0, 25.0), 1.0);
        assert!((mask_distance(1, 4) - 0.5).abs() < 1e-15);
        assert!((kernel_weight(0.25, 25.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn constant_model_gets_zero_coefficients() {
        let model = |_: &[bool]| Ok(vec![0.3, 0.7]);
        let r = lime_explain(&model, &words(6), &LimeConfig::default()).unwrap();
        assert_eq!(r.target_class, 1);
        assert!(r.scores.iter().all(|s| s.score.abs() < 1e-6));
        assert!((r.intercept - 0.7).abs() < 1e-9);
    }

    #[test]
    fn dominant_word_matches_exhaustive_oracle() {
        let w = [0.3, -0.2, 2.5, 0.1, 0.4, -0.5, 0.2];
        let teacher = |keep: &[bool]| {
            let z: f64 = keep.iter().zip(&w).filter(|(k, _)| **k).map(|(_, v)| v).sum::<f64>() - 0.5;
            Ok(vec![1.0 - sigmoid(z), sigmoid(z)])
        };
        // exhaustive average marginal effect of each word on P(class 1)
        let n = w.len();
        let mut effect = vec![0.0; n];
        for bits in 0u32..(1 << n) {
            let keep: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
            let p = teacher(&keep).unwrap()[1];
            for (i, e) in effect.iter_mut().enumerate() {
                *e += if keep[i] { p } else { -p };
            }
        }
        assert_eq!(argmax(&effect), 2);
        let r = lime_explain(&teacher, &words(n), &LimeConfig::default()).unwrap();
        let coef: Vec<f64> = r.scores.iter().map(|s| s.score).collect();
        assert_eq!(argmax(&coef), argmax(&effect));
    }

    #[test]
    fn same_seed_same_coefficients() {
        let model = |keep: &[bool]| {
            let k = keep.iter().filter(|&&x| x).count() as f64;
            Ok(vec![k / 10.0, 1.0 - k / 10.0])
        };
        let cfg = LimeConfig {
            seed: 9,
            ..Default::default()
        };
        let a = lime_explain(&model, &words(5), &cfg).unwrap();
        let b = lime_explain(&model, &words(5), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicated_samples_give_the_same_fit() {
        let masks = sample_masks(5, 40, 3);
        let y: Vec<f64> = masks.iter().map(|m| m.iter().filter(|&&k| k).count() as f64 * 0.1 + if m[2] { 0.5 } else { 0.0 }).collect();
        let wts: Vec<f64> = masks.iter().map(|m| kernel_weight(mask_distance(m.iter().filter(|&&k| k).count(), 5), 25.0)).collect();
        let (i1, c1) = fit_weighted_ridge(&masks, &y, &wts, 1e-3).unwrap();
        let twice = |v: &[Vec<bool>]| [v, v].concat();
        let (i2, c2) = fit_weighted_ridge(&twice(&masks), &[&y[..], &y[..]].concat(), &[&wts[..], &wts[..]].concat(), 1e-3).unwrap();
        assert!((i1 - i2).abs() < 1e-12);
        for (a, b) in c1.iter().zip(&c2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn masks_start_with_the_original_and_never_empty() {
        let masks = sample_masks(3, 100, 1);
        assert_eq!(masks.len(), 100);
        assert_eq!(masks[0], [true; 3]);
        assert!(masks.iter().all(|m| m.iter().any(|&k| k)));
    }

    #[test]
    fn invalid_requests() {
        let model = |_: &[bool]| Ok(vec![0.5, 0.5]);
        assert!(lime_explain(&model, &[], &LimeConfig::default()).is_err());
        let few = LimeConfig {
            n_samples: 5,
            ..Default::default()
        };
        assert!(lime_explain(&model, &words(3), &few).is_err());
    }
}
