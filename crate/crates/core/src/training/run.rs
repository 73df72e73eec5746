use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{InitSource, TrainConfig};
use super::metrics::{Metrics, Summary};
use super::optim::{lr_at, AdamW};
use crate::dataset::{class_count, Sentence};
use crate::error::{Error, Result};
use crate::features::FeatureDb;
use crate::model::{Encoder, ModelConfig, ModelInput};
use crate::numerics::{cross_entropy, cross_entropy_with_grad, SeededRng};
use crate::tokenizer::Vocab;

/// A sentence ready for the encoder.
#[derive(Debug, Clone)]
pub struct Example {
    pub id: String,
    pub words: Vec<String>,
    pub input: ModelInput,
    pub label: usize,
}

/// Shuffles with `seed` and puts `floor(ratio · n)` items in the training set.
/// Both halves keep their original relative order.
pub fn split<T: Clone>(items: &[T], ratio: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    let n = items.len();
    if n < 2 {
        return Err(Error::Validation(format!("cannot split {n} items")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio {ratio} outside (0, 1)")));
    }
    let n_train = ((ratio * n as f64 + 1e-9).floor() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::new(seed).derive("split").shuffle(&mut order);
    let (mut tr, mut te) = (order[..n_train].to_vec(), order[n_train..].to_vec());
    tr.sort_unstable();
    te.sort_unstable();
    let pick = |ix: Vec<usize>| ix.into_iter().map(|i| items[i].clone()).collect();
    Ok((pick(tr), pick(te)))
}

/// Fills vocabulary size, class count and EEG width from the data.
pub fn resolve_model_config(
    base: &ModelConfig,
    vocab: &Vocab,
    corpus: &[Sentence],
    db: Option<&FeatureDb>,
) -> ModelConfig {
    let mut cfg = base.clone();
    cfg.vocab_size = vocab.size();
    cfg.n_classes = class_count(corpus).max(2);
    if let Some(db) = db.filter(|d| d.channels() > 0) {
        cfg.eeg_channels = db.channels();
    }
    cfg
}

pub fn prepare(corpus: &[Sentence], vocab: &Vocab, db: Option<&FeatureDb>, cfg: &ModelConfig) -> Result<Vec<Example>> {
    corpus
        .iter()
        .map(|s| {
            let words = s.words();
            let input = ModelInput::lookup(&s.id, &words, db, vocab, cfg)?;
            if s.label >= cfg.n_classes {
                return Err(Error::Index {
                    what: "label",
                    index: s.label,
                    len: cfg.n_classes,
                });
            }
            Ok(Example {
                id: s.id.clone(),
                words,
                input,
                label: s.label,
            })
        })
        .collect()
}

/// Fresh encoder for one run, following the configured init source.
pub fn init_encoder(cfg: &TrainConfig, model_cfg: &ModelConfig, seed: u64) -> Result<Encoder> {
    let mut enc = Encoder::random(model_cfg.clone(), seed)?;
    if let InitSource::Checkpoint(path) = &cfg.init {
        enc.load_matching(path)?;
    }
    Ok(enc)
}

/// Mean cross-entropy over `data` without dropout.
pub fn mean_loss(enc: &Encoder, data: &[Example]) -> Result<f64> {
    let losses = data
        .par_iter()
        .map(|ex| cross_entropy(&enc.forward(&ex.input)?.logits, ex.label))
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / data.len().max(1) as f64)
}

/// One optimizer step on the batch-mean loss; returns that loss.
pub fn train_step(
    enc: &mut Encoder,
    opt: &mut AdamW,
    batch: &[&Example],
    lr: f64,
    mut dropout: Option<&mut SeededRng>,
) -> Result<f64> {
    enc.params_mut().zero_grad();
    let mut total = 0.0;
    for ex in batch {
        let pass = match dropout.as_deref_mut() {
            Some(rng) => enc.forward_train(&ex.input, rng)?,
            None => enc.forward(&ex.input)?,
        };
        let (loss, dlogits) = cross_entropy_with_grad(&pass.logits, ex.label)?;
        total += loss;
        enc.backward(&pass, &dlogits)?;
    }
    let n = batch.len() as f64;
    enc.params_mut().scale_grads(1.0 / n);
    opt.step(enc.params_mut(), lr);
    Ok(total / n)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub encoder: Encoder,
    /// Mean training loss before the first step (no dropout).
    pub initial_loss: f64,
    /// Mean mini-batch loss of each epoch.
    pub loss_history: Vec<f64>,
    pub steps: usize,
}

/// Mini-batch AdamW with linear decay to zero over all steps. Batches are
/// reshuffled every epoch from `seed`.
pub fn train(cfg: &TrainConfig, model_cfg: &ModelConfig, data: &[Example], seed: u64) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Validation("empty training set".into()));
    }
    let mut enc = init_encoder(cfg, model_cfg, seed)?;
    let mut opt = AdamW::new(enc.params(), cfg.weight_decay);
    let root = SeededRng::new(seed);
    let mut shuffle = root.derive("shuffle");
    let mut dropout = root.derive("dropout");
    let per_epoch = data.len().div_ceil(cfg.batch_size);
    let total = per_epoch * cfg.epochs;
    let initial_loss = mean_loss(&enc, data)?;

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut step = 0;
    for _ in 0..cfg.epochs {
        shuffle.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &data[i]).collect();
            let lr = lr_at(step, total, cfg.lr);
            let loss = match train_step(&mut enc, &mut opt, &batch, lr, Some(&mut dropout)) {
                Ok(l) if l.is_finite() => l,
                Ok(l) => return Err(Error::Diverged { step, loss: l }),
                Err(Error::Numeric(_)) => return Err(Error::Diverged { step, loss: f64::NAN }),
                Err(e) => return Err(e),
            };
            epoch_loss += loss * batch.len() as f64;
            step += 1;
        }
        history.push(epoch_loss / data.len() as f64);
    }
    Ok(TrainOutcome {
        encoder: enc,
        initial_loss,
        loss_history: history,
        steps: step,
    })
}

pub fn predict_all(enc: &Encoder, data: &[Example]) -> Result<Vec<usize>> {
    data.par_iter().map(|ex| enc.predict(&ex.input)).collect()
}

pub fn evaluate(enc: &Encoder, test: &[Example]) -> Result<Metrics> {
    let pred = predict_all(enc, test)?;
    let truth: Vec<usize> = test.iter().map(|e| e.label).collect();
    Metrics::from_predictions(&truth, &pred, enc.config().n_classes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub run: usize,
    pub seed: u64,
    pub metrics: Metrics,
    pub initial_loss: f64,
    pub loss_history: Vec<f64>,
}

/// Everything needed to compare one configuration against another.
/// Wall-clock times are kept out of the serialized form so reports from
/// identical runs are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub train_config: TrainConfig,
    pub model_config: ModelConfig,
    pub train_size: usize,
    pub test_size: usize,
    pub test_ids: Vec<String>,
    pub runs: Vec<RunEntry>,
    pub mean: Summary,
    #[serde(skip)]
    pub wall_clock_secs: Vec<f64>,
}

impl RunReport {
    pub fn csv_header() -> &'static str {
        "mode,run,seed,precision,recall,f1,f1_std,accuracy"
    }

    /// One row per run and a final `mean` row, four decimals.
    pub fn to_csv(&self) -> String {
        let mode = self.model_config.mode;
        let mut out = format!("{}\n", Self::csv_header());
        for r in &self.runs {
            let m = &r.metrics;
            out.push_str(&format!(
                "{mode},{},{},{:.4},{:.4},{:.4},,{:.4}\n",
                r.run, r.seed, m.precision, m.recall, m.f1, m.accuracy
            ));
        }
        let s = &self.mean;
        out.push_str(&format!(
            "{mode},mean,,{:.4},{:.4},{:.4},{:.4},{:.4}\n",
            s.precision, s.recall, s.f1, s.f1_std, s.accuracy
        ));
        out
    }

    /// Index of the run with the highest F1 (earliest on ties).
    pub fn best_run(&self) -> usize {
        let mut best = 0;
        for (i, r) in self.runs.iter().enumerate() {
            if r.metrics.f1 > self.runs[best].metrics.f1 {
                best = i;
            }
        }
        best
    }
}

pub fn run_seed(master: u64, run: usize) -> u64 {
    SeededRng::new(master).derive(&format!("run{run}")).seed()
}

/// Trained models alongside their report.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: RunReport,
    pub models: Vec<Encoder>,
}

/// `cfg.repeats` independent train + evaluate cycles on a fixed split.
pub fn repeat_runs(cfg: &TrainConfig, model_cfg: &ModelConfig, train_set: &[Example], test_set: &[Example]) -> Result<Experiment> {
    cfg.validate()?;
    if test_set.is_empty() {
        return Err(Error::Validation("empty test set".into()));
    }
    let results = (0..cfg.repeats)
        .into_par_iter()
        .map(|run| {
            let start = Instant::now();
            let seed = run_seed(cfg.seed, run);
            let out = train(cfg, model_cfg, train_set, seed)?;
            let metrics = evaluate(&out.encoder, test_set)?;
            let entry = RunEntry {
                run,
                seed,
                metrics,
                initial_loss: out.initial_loss,
                loss_history: out.loss_history,
            };
            Ok((entry, out.encoder, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut runs = Vec::with_capacity(results.len());
    let mut models = Vec::with_capacity(results.len());
    let mut wall = Vec::with_capacity(results.len());
    for (e, m, t) in results {
        runs.push(e);
        models.push(m);
        wall.push(t);
    }
    let mean = Summary::over(runs.iter().map(|r| &r.metrics));
    Ok(Experiment {
        report: RunReport {
            train_config: cfg.clone(),
            model_config: model_cfg.clone(),
            train_size: train_set.len(),
            test_size: test_set.len(),
            test_ids: test_set.iter().map(|e| e.id.clone()).collect(),
            runs,
            mean,
            wall_clock_secs: wall,
        },
        models,
    })
}

/// Splits `corpus`, prepares both halves and runs the repeated protocol.
pub fn run_experiment(
    cfg: &TrainConfig,
    model_cfg: &ModelConfig,
    corpus: &[Sentence],
    vocab: &Vocab,
    db: Option<&FeatureDb>,
) -> Result<Experiment> {
    cfg.validate()?;
    let model_cfg = resolve_model_config(model_cfg, vocab, corpus, db);
    model_cfg.validate()?;
    let (train_s, test_s) = split(corpus, cfg.split_ratio, cfg.seed)?;
    let train_set = prepare(&train_s, vocab, db, &model_cfg)?;
    let test_set = prepare(&test_s, vocab, db, &model_cfg)?;
    repeat_runs(cfg, &model_cfg, &train_set, &test_set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes_follow_the_floor_rule() {
        let items: Vec<usize> = (0..302).collect();
        let (tr, te) = split(&items, 0.8, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (241, 61));
        let (tr, te) = split(&(0..10).collect::<Vec<_>>(), 0.8, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        assert!(split(&[1], 0.8, 1).is_err());
    }

    #[test]
    fn split_is_deterministic_disjoint_and_exhaustive() {
        let items: Vec<usize> = (0..50).collect();
        let a = split(&items, 0.8, 7).unwrap();
        assert_eq!(a, split(&items, 0.8, 7).unwrap());
        assert_ne!(a, split(&items, 0.8, 8).unwrap());
        let mut all = [a.0.clone(), a.1.clone()].concat();
        all.sort_unstable();
        assert_eq!(all, items);
    }

    #[test]
    fn run_seeds_are_distinct() {
        let seeds: std::collections::BTreeSet<u64> = (0..10).map(|r| run_seed(42, r)).collect();
        assert_eq!(seeds.len(), 10);
    }
}
