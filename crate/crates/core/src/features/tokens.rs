//! Word- and sentence-level cognitive feature formulas.

use super::measurements::{WordEEG, WordFixation, BAND_COUNT};
use crate::error::{Error, Result};
use crate::tokenizer::{TokenizedSentence, MASK_NEG};

/// Largest cognitive token value; embedding tables have `MAX_TOKEN + 1` rows.
pub const MAX_TOKEN: u8 = 100;

/// `n_fixations · (FFD + TRT + GD + GPT)`, zero for unfixated words.
pub fn eye_token_raw(f: &WordFixation) -> Result<f64> {
    f.validate()?;
    if f.n_fixations == 0 {
        return Ok(0.0);
    }
    Ok(f64::from(f.n_fixations) * (f.ffd + f.trt + f.gd + f.gpt))
}

fn to_token(x: f64) -> u8 {
    x.round().clamp(0.0, f64::from(MAX_TOKEN)) as u8
}

/// Per-sentence scaling: `round(100 · v / max)`. An all-zero sentence stays zero.
pub fn scale_eye_tokens(raw: &[f64]) -> Result<Vec<u8>> {
    if raw.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Validation("raw eye values must be non-negative".into()));
    }
    let max = raw.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(vec![0; raw.len()]);
    }
    Ok(raw.iter().map(|v| to_token(100.0 * v / max)).collect())
}

/// Element-wise mean of equal-length vectors.
pub fn column_mean(vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
    let Some(first) = vectors.first() else {
        return Ok(Vec::new());
    };
    let c = first.len();
    let mut out = vec![0.0; c];
    for v in vectors {
        if v.len() != c {
            return Err(Error::Validation(format!(
                "vector length {} differs from {c}",
                v.len()
            )));
        }
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    let n = vectors.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    Ok(out)
}

/// Column mean over the 32 FRP×band vectors of a fixated word; `None` if unfixated.
pub fn word_eeg_vector(e: &WordEEG) -> Result<Option<Vec<f64>>> {
    e.validate()?;
    if !e.is_present() {
        return Ok(None);
    }
    column_mean(&e.vectors).map(Some)
}

/// Mean over channels of the word's averaged EEG vector; zero when unfixated.
pub fn eeg_token_raw(e: &WordEEG) -> Result<f64> {
    Ok(match word_eeg_vector(e)? {
        Some(v) => v.iter().sum::<f64>() / v.len() as f64,
        None => 0.0,
    })
}

/// Corpus-level min-max to integers 0..=100.
///
/// `None` marks an unfixated word and always maps to 0. The range runs from
/// `min(0, smallest value)` to the largest value, so negative raws are
/// offset-shifted and an all-equal non-zero corpus (of either sign) maps to 100.
pub fn scale_eeg_tokens(raw: &[Option<f64>]) -> Result<Vec<u8>> {
    if raw.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Validation("raw EEG values must be finite".into()));
    }
    let lo = raw.iter().flatten().copied().fold(0.0, f64::min);
    let hi = raw.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(raw
        .iter()
        .map(|v| match v {
            None => 0,
            // degenerate range: every present value is equal
            Some(x) if hi <= lo => {
                if *x == 0.0 {
                    0
                } else {
                    MAX_TOKEN
                }
            }
            Some(x) => to_token(100.0 * (x - lo) / (hi - lo)),
        })
        .collect())
}

/// Element-wise mean of the eight sentence-level band vectors.
pub fn sentence_eeg(bands: &[Vec<f64>]) -> Result<Vec<f64>> {
    if bands.len() != BAND_COUNT {
        return Err(Error::Validation(format!(
            "sentence EEG needs {BAND_COUNT} band vectors, got {}",
            bands.len()
        )));
    }
    column_mean(bands)
}

/// Additive attention mask from fixation counts: 0 at CLS, SEP and words
/// fixated more than once; [`MASK_NEG`] for everything else including PAD.
pub fn cognitive_mask(n_fixations: &[u32], layout: &TokenizedSentence) -> Result<Vec<f64>> {
    if n_fixations.len() != layout.word_count {
        return Err(Error::Validation(format!(
            "{} fixation counts for {} words",
            n_fixations.len(),
            layout.word_count
        )));
    }
    let mut mask = vec![MASK_NEG; layout.max_len()];
    mask[0] = 0.0;
    mask[layout.sep_position()] = 0.0;
    for (i, &n) in n_fixations.iter().enumerate() {
        if n > 1 {
            mask[i + 1] = 0.0;
        }
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::{encode, Vocab};

    fn fix(n: u32, ffd: f64, trt: f64, gd: f64, gpt: f64) -> WordFixation {
        WordFixation {
            n_fixations: n,
            ffd,
            trt,
            gd,
            gpt,
            sfd: 0.0,
        }
    }

    #[test]
    fn eye_raw_examples() {
        assert_eq!(eye_token_raw(&WordFixation::unfixated()).unwrap(), 0.0);
        assert_eq!(eye_token_raw(&fix(2, 120.0, 300.0, 180.0, 320.0)).unwrap(), 1840.0);
        assert_eq!(eye_token_raw(&fix(1, 100.0, 100.0, 100.0, 100.0)).unwrap(), 400.0);
        assert!(eye_token_raw(&fix(1, -5.0, 100.0, 100.0, 100.0)).is_err());
    }

    #[test]
    fn eye_scaling_examples() {
        assert_eq!(scale_eye_tokens(&[0.0, 400.0, 1840.0]).unwrap(), [0, 22, 100]);
        assert_eq!(scale_eye_tokens(&[0.0, 0.0, 0.0]).unwrap(), [0, 0, 0]);
        assert_eq!(scale_eye_tokens(&[5.0]).unwrap(), [100]);
    }

    #[test]
    fn eeg_raw_examples() {
        assert_eq!(eeg_token_raw(&WordEEG::new(vec![vec![0.0; 4]; 32]).unwrap()).unwrap(), 0.0);
        assert_eq!(eeg_token_raw(&WordEEG::absent()).unwrap(), 0.0);
        let cm = column_mean(&[vec![1.0, 3.0], vec![2.0, 4.0], vec![3.0, 5.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(cm, [2.0, 4.0]);
        assert_eq!(cm.iter().sum::<f64>() / 2.0, 3.0);
        // Same numbers laid out as a full 32-vector word.
        let mut vs = Vec::new();
        for _ in 0..8 {
            vs.extend([vec![1.0, 3.0], vec![2.0, 4.0], vec![3.0, 5.0], vec![2.0, 4.0]]);
        }
        assert_eq!(eeg_token_raw(&WordEEG::new(vs).unwrap()).unwrap(), 3.0);
    }

    #[test]
    fn eeg_scaling_examples() {
        assert_eq!(scale_eeg_tokens(&[Some(0.0), Some(3.0), Some(6.0)]).unwrap(), [0, 50, 100]);
        assert_eq!(scale_eeg_tokens(&[Some(2.5), Some(2.5)]).unwrap(), [100, 100]);
        assert_eq!(scale_eeg_tokens(&[Some(0.0)]).unwrap(), [0]);
        assert_eq!(scale_eeg_tokens(&[None, Some(3.0), Some(6.0)]).unwrap(), [0, 50, 100]);
        assert_eq!(scale_eeg_tokens(&[None, Some(-2.0), Some(2.0)]).unwrap(), [0, 0, 100]);
        assert_eq!(scale_eeg_tokens(&[Some(-1.5), None, Some(-1.5)]).unwrap(), [100, 0, 100]);
    }

    #[test]
    fn sentence_eeg_examples() {
        let v = vec![0.5, -1.0, 2.0];
        assert_eq!(sentence_eeg(&vec![v.clone(); 8]).unwrap(), v);
        let mut bands = vec![vec![0.0, 2.0]; 4];
        bands.extend(vec![vec![2.0, 4.0]; 4]);
        assert_eq!(sentence_eeg(&bands).unwrap(), [1.0, 3.0]);
        assert_eq!(sentence_eeg(&vec![vec![0.0; 3]; 8]).unwrap(), [0.0; 3]);
        assert!(sentence_eeg(&vec![vec![0.0; 3]; 7]).is_err());
        let mut bad = vec![vec![0.0; 3]; 8];
        bad[3] = vec![0.0; 2];
        assert!(sentence_eeg(&bad).is_err());
    }

    #[test]
    fn cognitive_mask_matches_worked_example() {
        let words = ["he", "won", "the", "nobel", "prize"];
        let vocab = Vocab::build(&["he won the nobel prize"], 1);
        let layout = encode(&words, &vocab, 9).unwrap();
        let mask = cognitive_mask(&[1, 3, 0, 2, 2], &layout).unwrap();
        let n = MASK_NEG;
        assert_eq!(mask, [0.0, n, 0.0, n, 0.0, 0.0, 0.0, n, n]);
        assert!(cognitive_mask(&[1, 2], &layout).is_err());
    }

    #[test]
    fn cognitive_mask_with_all_fixated_equals_base_mask() {
        let vocab = Vocab::build(&["a b c"], 1);
        let layout = encode(&["a", "b", "c"], &vocab, 8).unwrap();
        assert_eq!(cognitive_mask(&[2, 5, 3], &layout).unwrap(), layout.base_mask);
    }
}
