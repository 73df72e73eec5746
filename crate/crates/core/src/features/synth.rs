//! Synthetic planted-keyword corpus with consistent eye-tracking and EEG
//! measurements, for exercising the whole pipeline without recordings.
//!
//! Every sentence carries at least one keyword of its class. Keywords are
//! fixated several times with long durations and a class-tilted EEG
//! response; fillers are mostly skipped. The distractor variant adds
//! unfixated keywords of a wrong class to every sentence, so only the
//! fixation signal tells the true keyword apart.

use serde::{Deserialize, Serialize};

use super::db::{derive_feature_db, FeatureDb};
use super::measurements::{
    SentenceMeasurements, WordEEG, WordFixation, WordMeasurement, BAND_COUNT, FRP_COUNT,
};
use crate::dataset::Sentence;
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

pub const RELATION_TYPES: [&str; 8] = [
    "award",
    "education",
    "job_title",
    "political_affiliation",
    "wife",
    "visited",
    "nationality",
    "founder",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixationModel {
    /// Inclusive range of fixation counts for keywords.
    pub keyword_fixations: (u32, u32),
    /// Probability that a filler word is skipped entirely.
    pub filler_skip_prob: f64,
    /// Probability that a non-skipped filler is fixated twice.
    pub filler_refixation_prob: f64,
}

impl Default for FixationModel {
    fn default() -> Self {
        Self {
            keyword_fixations: (2, 4),
            filler_skip_prob: 0.7,
            filler_refixation_prob: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EegModel {
    pub baseline: f64,
    /// Added to every channel of a keyword occurrence.
    pub keyword_gain: f64,
    /// Added to the class channel (`class % C`) of a keyword occurrence.
    pub class_tilt: f64,
    pub noise_std: f64,
    pub sentence_noise_std: f64,
}

impl Default for EegModel {
    fn default() -> Self {
        Self {
            baseline: 1.0,
            keyword_gain: 0.8,
            class_tilt: 1.5,
            noise_std: 0.25,
            sentence_noise_std: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_classes: usize,
    /// Total sentences; labels are assigned round-robin so classes stay balanced.
    pub n_sentences: usize,
    /// Distinct words: keywords plus fillers.
    pub vocab_size: usize,
    pub keywords_per_class: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub second_keyword_prob: f64,
    /// Unfixated keywords of one wrong class added to every sentence.
    pub distractors_per_sentence: usize,
    pub channels: usize,
    pub class_names: Vec<String>,
    pub fixation: FixationModel,
    pub eeg: EegModel,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_classes: 8,
            n_sentences: 500,
            vocab_size: 200,
            keywords_per_class: 5,
            min_words: 5,
            max_words: 10,
            second_keyword_prob: 0.3,
            distractors_per_sentence: 0,
            channels: 8,
            class_names: RELATION_TYPES.iter().map(|s| s.to_string()).collect(),
            fixation: FixationModel::default(),
            eeg: EegModel::default(),
        }
    }
}

impl SynthConfig {
    /// Keywords are the only words fixated more than once; each sentence also
    /// holds an unfixated keyword of a wrong class.
    pub fn distractor() -> Self {
        Self {
            distractors_per_sentence: 1,
            second_keyword_prob: 0.0,
            fixation: FixationModel {
                filler_refixation_prob: 0.0,
                ..FixationModel::default()
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_classes < 2 {
            return bad("n_classes must be at least 2".into());
        }
        if self.n_sentences < self.n_classes {
            return bad("n_sentences must be at least n_classes".into());
        }
        if self.keywords_per_class == 0 {
            return bad("keywords_per_class must be positive".into());
        }
        if self.min_words == 0 || self.max_words < self.min_words {
            return bad("need 1 <= min_words <= max_words".into());
        }
        let planted = 1 + usize::from(self.second_keyword_prob > 0.0) + self.distractors_per_sentence;
        if self.min_words < planted {
            return bad(format!("min_words must leave room for {planted} planted words"));
        }
        if self.second_keyword_prob > 0.0 && self.keywords_per_class < 2 {
            return bad("second keywords need keywords_per_class >= 2".into());
        }
        if self.distractors_per_sentence > self.keywords_per_class {
            return bad("more distractors than keywords per class".into());
        }
        let keywords = self.n_classes * self.keywords_per_class;
        if self.vocab_size <= keywords {
            return bad(format!("vocab_size must exceed the {keywords} keywords"));
        }
        if self.channels == 0 {
            return bad("channels must be positive".into());
        }
        if !self.class_names.is_empty() && self.class_names.len() != self.n_classes {
            return bad("class_names must be empty or have n_classes entries".into());
        }
        let probs = [
            self.second_keyword_prob,
            self.fixation.filler_skip_prob,
            self.fixation.filler_refixation_prob,
        ];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("probabilities must lie in [0, 1]".into());
        }
        let (lo, hi) = self.fixation.keyword_fixations;
        if lo < 2 || hi < lo {
            return bad("keyword_fixations must be a range starting at 2 or more".into());
        }
        if self.eeg.noise_std < 0.0 || self.eeg.sentence_noise_std < 0.0 {
            return bad("noise std must be non-negative".into());
        }
        Ok(())
    }

    fn class_name(&self, c: usize) -> String {
        self.class_names
            .get(c)
            .cloned()
            .unwrap_or_else(|| format!("class{c}"))
    }
}

/// Generated corpus and everything derived from it.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Vec<Sentence>,
    pub measurements: Vec<SentenceMeasurements>,
    pub db: FeatureDb,
    /// Planted keywords per class.
    pub keywords: Vec<Vec<String>>,
    pub class_names: Vec<String>,
}

impl SynthCorpus {
    pub fn labels(&self) -> Vec<usize> {
        self.corpus.iter().map(|s| s.label).collect()
    }

    pub fn is_keyword_of(&self, word: &str, class: usize) -> bool {
        self.keywords[class].iter().any(|k| k == word)
    }
}

/// Serializable summary written next to the generated files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthMeta {
    pub seed: u64,
    pub config: SynthConfig,
    pub class_names: Vec<String>,
    pub keywords: Vec<Vec<String>>,
}

fn quantize(x: f64, step: f64) -> f64 {
    (x / step).round() * step
}

#[derive(Clone, Copy, PartialEq)]
enum Role {
    Keyword(usize),
    Distractor,
    Filler,
}

pub fn synth_generate(cfg: &SynthConfig, seed: u64) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut rng = SeededRng::new(seed).derive("synth");

    let class_names: Vec<String> = (0..cfg.n_classes).map(|c| cfg.class_name(c)).collect();
    let keywords: Vec<Vec<String>> = class_names
        .iter()
        .map(|name| {
            let stem: String = name.chars().filter(|c| c.is_alphanumeric()).collect();
            (0..cfg.keywords_per_class)
                .map(|j| format!("{}{j}", stem.to_lowercase()))
                .collect()
        })
        .collect();
    let n_fillers = cfg.vocab_size - cfg.n_classes * cfg.keywords_per_class;
    let fillers: Vec<String> = (0..n_fillers).map(|i| format!("w{i:03}")).collect();

    let mut corpus = Vec::with_capacity(cfg.n_sentences);
    let mut measurements = Vec::with_capacity(cfg.n_sentences);
    let width = cfg.n_sentences.to_string().len().max(4);
    for i in 0..cfg.n_sentences {
        let label = i % cfg.n_classes;
        let len = cfg.min_words + rng.below(cfg.max_words - cfg.min_words + 1);

        let mut slots: Vec<(String, Role)> = Vec::with_capacity(len);
        let k1 = rng.below(cfg.keywords_per_class);
        slots.push((keywords[label][k1].clone(), Role::Keyword(label)));
        if cfg.second_keyword_prob > 0.0 && rng.bernoulli(cfg.second_keyword_prob) {
            let mut k2 = rng.below(cfg.keywords_per_class - 1);
            if k2 >= k1 {
                k2 += 1;
            }
            slots.push((keywords[label][k2].clone(), Role::Keyword(label)));
        }
        if cfg.distractors_per_sentence > 0 {
            let mut wrong = rng.below(cfg.n_classes - 1);
            if wrong >= label {
                wrong += 1;
            }
            let mut picks: Vec<usize> = (0..cfg.keywords_per_class).collect();
            rng.shuffle(&mut picks);
            for &k in &picks[..cfg.distractors_per_sentence] {
                slots.push((keywords[wrong][k].clone(), Role::Distractor));
            }
        }
        while slots.len() < len {
            slots.push((fillers[rng.below(n_fillers)].clone(), Role::Filler));
        }
        rng.shuffle(&mut slots);

        let mut words = Vec::with_capacity(len);
        for (word, role) in &slots {
            let n = match role {
                Role::Keyword(_) => {
                    let (lo, hi) = cfg.fixation.keyword_fixations;
                    lo + rng.below((hi - lo + 1) as usize) as u32
                }
                Role::Distractor => 0,
                Role::Filler => {
                    if rng.bernoulli(cfg.fixation.filler_skip_prob) {
                        0
                    } else if rng.bernoulli(cfg.fixation.filler_refixation_prob) {
                        2
                    } else {
                        1
                    }
                }
            };
            let fixation = fixation_for(n, matches!(role, Role::Keyword(_)), &mut rng);
            let eeg = if n == 0 {
                WordEEG::absent()
            } else {
                word_eeg_for(*role, cfg, &mut rng)
            };
            words.push(WordMeasurement {
                word: word.clone(),
                fixation,
                eeg,
            });
        }

        let sentence_bands = sentence_bands_for(&words, label, cfg, &mut rng)?;
        let id = format!("syn{i:0width$}");
        let mut text = slots
            .iter()
            .map(|(w, _)| w.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        if let Some(first) = text.get_mut(0..1) {
            first.make_ascii_uppercase();
        }
        text.push('.');
        corpus.push(Sentence {
            id: id.clone(),
            text,
            label,
        });
        measurements.push(SentenceMeasurements {
            id,
            label,
            words,
            sentence_bands,
        });
    }

    let db = derive_feature_db(&measurements)?;
    Ok(SynthCorpus {
        corpus,
        measurements,
        db,
        keywords,
        class_names,
    })
}

fn fixation_for(n: u32, keyword: bool, rng: &mut SeededRng) -> WordFixation {
    if n == 0 {
        return WordFixation::unfixated();
    }
    let (lo, hi) = if keyword { (180.0, 300.0) } else { (90.0, 200.0) };
    let ffd = rng.uniform_range(lo, hi).round();
    let gd = if n > 1 {
        ffd + rng.uniform_range(0.0, 150.0).round()
    } else {
        ffd
    };
    let trt = gd + if n > 1 { rng.uniform_range(50.0, 300.0).round() } else { 0.0 };
    let gpt = gd + rng.uniform_range(0.0, 200.0).round();
    WordFixation {
        n_fixations: n,
        ffd,
        trt,
        gd,
        gpt,
        sfd: if n == 1 { ffd } else { 0.0 },
    }
}

fn word_eeg_for(role: Role, cfg: &SynthConfig, rng: &mut SeededRng) -> WordEEG {
    let c = cfg.channels;
    let m = &cfg.eeg;
    let vectors = (0..FRP_COUNT * BAND_COUNT)
        .map(|_| {
            (0..c)
                .map(|ch| {
                    let mut mean = m.baseline;
                    if let Role::Keyword(class) = role {
                        mean += m.keyword_gain;
                        if ch == class % c {
                            mean += m.class_tilt;
                        }
                    }
                    quantize(rng.normal(mean, m.noise_std).max(0.0), 1e-4)
                })
                .collect()
        })
        .collect();
    WordEEG { vectors }
}

fn sentence_bands_for(
    words: &[WordMeasurement],
    label: usize,
    cfg: &SynthConfig,
    rng: &mut SeededRng,
) -> Result<Vec<Vec<f64>>> {
    let c = cfg.channels;
    let mut centre = vec![0.0; c];
    let mut fixated = 0;
    for w in words {
        if let Some(v) = super::tokens::word_eeg_vector(&w.eeg)? {
            for (o, x) in centre.iter_mut().zip(&v) {
                *o += x;
            }
            fixated += 1;
        }
    }
    if fixated == 0 {
        centre.fill(cfg.eeg.baseline);
    } else {
        centre.iter_mut().for_each(|x| *x /= fixated as f64);
    }
    centre[label % c] += 0.5 * cfg.eeg.class_tilt;
    Ok((0..BAND_COUNT)
        .map(|_| {
            centre
                .iter()
                .map(|&x| quantize(rng.normal(x, cfg.eeg.sentence_noise_std).max(0.0), 1e-4))
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::preprocess;

    fn small() -> SynthConfig {
        SynthConfig {
            n_sentences: 80,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synth_generate(&small(), 3).unwrap();
        let b = synth_generate(&small(), 3).unwrap();
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.measurements, b.measurements);
        assert_eq!(a.db, b.db);
        let c = synth_generate(&small(), 4).unwrap();
        assert_ne!(a.corpus, c.corpus);
    }

    #[test]
    fn every_sentence_has_a_keyword_of_its_class() {
        let s = synth_generate(&small(), 1).unwrap();
        for sent in &s.corpus {
            assert!(sent.words().iter().any(|w| s.is_keyword_of(w, sent.label)));
        }
    }

    #[test]
    fn keywords_are_fixated_more_than_fillers() {
        let s = synth_generate(&SynthConfig::default(), 9).unwrap();
        let (mut kw, mut fl) = (Vec::new(), Vec::new());
        for m in &s.measurements {
            for w in &m.words {
                let n = f64::from(w.fixation.n_fixations);
                if s.keywords.iter().flatten().any(|k| *k == w.word) {
                    kw.push(n);
                } else {
                    fl.push(n);
                }
            }
        }
        assert!(kw.len() + fl.len() >= 1000);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&kw) > mean(&fl));
    }

    #[test]
    fn text_preprocesses_to_measured_words() {
        let s = synth_generate(&small(), 2).unwrap();
        for (sent, m) in s.corpus.iter().zip(&s.measurements) {
            assert_eq!(preprocess(&sent.text), m.words());
        }
    }

    #[test]
    fn distractor_variant_only_fixates_true_keywords_repeatedly() {
        let cfg = SynthConfig {
            n_sentences: 64,
            ..SynthConfig::distractor()
        };
        let s = synth_generate(&cfg, 5).unwrap();
        for m in &s.measurements {
            let mut wrong_class_words = 0;
            for w in &m.words {
                let own = s.is_keyword_of(&w.word, m.label);
                assert_eq!(w.fixation.n_fixations > 1, own, "{}", w.word);
                if !own && s.keywords.iter().flatten().any(|k| *k == w.word) {
                    wrong_class_words += 1;
                    assert_eq!(w.fixation.n_fixations, 0);
                }
            }
            assert_eq!(wrong_class_words, 1);
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = SynthConfig {
            vocab_size: 40,
            ..SynthConfig::default()
        };
        assert!(matches!(synth_generate(&bad, 0), Err(Error::Config(_))));
        let bad = SynthConfig {
            n_classes: 1,
            ..SynthConfig::default()
        };
        assert!(synth_generate(&bad, 0).is_err());
    }
}
