use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::args::{Command, EvalArgs, ExplainArgs, GlobalArgs, LexiconCommand, ModelFiles, TrainArgs};
use super::CliError;
use crate::dataset::{load_corpus, save_corpus, Sentence};
use crate::error::Error;
use crate::explain::{explain_sentence, ExplanationReport, LimeConfig, OverlapSummary};
use crate::features::{
    build_lexicon, derive_feature_db, lexicon_sentence_eeg, synth_generate, CognitiveRecord, EegLexicon,
    FeatureDb, SentenceMeasurements, SynthConfig, SynthMeta,
};
use crate::io::{read_json, read_jsonl, write_json, write_jsonl};
use crate::model::{AugmentationMode, Encoder, ModelConfig, ModelInput};
use crate::numerics::SeededRng;
use crate::tokenizer::Vocab;
use crate::training::{evaluate, prepare, run_experiment, InitSource, Metrics, RunReport, TrainConfig};

type CmdResult = Result<(), CliError>;

const DEFAULT_SEED: u64 = 42;

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn print_json<T: Serialize>(value: &T) -> CmdResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::new(2, e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn load_config<T: serde::de::DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T, CliError> {
    match path {
        Some(p) => read_json(p).map_err(|e| CliError::new(2, e.to_string())),
        None => Ok(T::default()),
    }
}

fn load_db(path: &Option<PathBuf>) -> Result<Option<FeatureDb>, Error> {
    path.as_deref().map(FeatureDb::load).transpose()
}

pub fn dispatch(g: &GlobalArgs, cmd: &Command) -> CmdResult {
    match cmd {
        Command::Synth { distractor, sentences } => synth(g, *distractor, *sentences),
        Command::Features { measurements } => features(g, measurements),
        Command::Train(a) => train(g, a),
        Command::Eval(a) => eval(g, a),
        Command::Lexicon(c) => lexicon(g, c),
        Command::Explain(a) => explain(g, a),
        Command::Gradcheck { eps, tolerance } => gradcheck(g, *eps, *tolerance),
        Command::Report { inputs } => report(g, inputs),
    }
}

fn synth(g: &GlobalArgs, distractor: bool, sentences: Option<usize>) -> CmdResult {
    let mut cfg: SynthConfig = match (&g.config, distractor) {
        (Some(_), _) => load_config(&g.config)?,
        (None, true) => SynthConfig::distractor(),
        (None, false) => SynthConfig::default(),
    };
    if let Some(n) = sentences {
        cfg.n_sentences = n;
    }
    if g.print_config {
        return print_json(&cfg);
    }
    let seed = g.seed.unwrap_or(DEFAULT_SEED);
    let syn = synth_generate(&cfg, seed)?;
    ensure_dir(&g.out)?;
    save_corpus(&g.out.join("corpus.jsonl"), &syn.corpus)?;
    write_jsonl(&g.out.join("measurements.jsonl"), &syn.measurements)?;
    syn.db.save(&g.out.join("features.jsonl"))?;
    let meta = SynthMeta {
        seed,
        config: cfg,
        class_names: syn.class_names.clone(),
        keywords: syn.keywords.clone(),
    };
    write_json(&g.out.join("synth_meta.json"), &meta)?;
    eprintln!("wrote {} sentences to {}", syn.corpus.len(), g.out.display());
    Ok(())
}

fn features(g: &GlobalArgs, measurements: &Path) -> CmdResult {
    let sentences: Vec<SentenceMeasurements> = read_jsonl(measurements)?;
    let db = derive_feature_db(&sentences)?;
    ensure_dir(&g.out)?;
    db.save(&g.out.join("features.jsonl"))?;
    eprintln!("wrote {} feature records", db.len());
    Ok(())
}

#[derive(Serialize)]
struct ResolvedTrain<'a> {
    train: &'a TrainConfig,
    model: &'a ModelConfig,
}

fn train(g: &GlobalArgs, a: &TrainArgs) -> CmdResult {
    let mut tc: TrainConfig = load_config(&g.config)?;
    let mut mc: ModelConfig = load_config(&a.model_config)?;
    if a.robustness {
        tc = tc.robustness();
    }
    if let Some(s) = g.seed {
        tc.seed = s;
    }
    if let Some(r) = g.repeats {
        tc.repeats = r;
    }
    if let Some(e) = g.epochs {
        tc.epochs = e;
    }
    if let Some(lr) = a.lr {
        tc.lr = lr;
    }
    if let Some(b) = a.batch_size {
        tc.batch_size = b;
    }
    if let Some(p) = &a.init {
        tc.init = InitSource::Checkpoint(p.clone());
    }
    if let Some(m) = g.mode {
        mc.mode = m;
    }
    if g.print_config {
        return print_json(&ResolvedTrain { train: &tc, model: &mc });
    }
    tc.validate()?;
    let corpus = load_corpus(&a.corpus)?;
    let db = load_db(&a.features)?;
    let texts: Vec<&str> = corpus.iter().map(|s| s.text.as_str()).collect();
    let vocab = Vocab::build(&texts, 1);
    let exp = run_experiment(&tc, &mc, &corpus, &vocab, db.as_ref())?;
    let report = &exp.report;

    ensure_dir(&g.out)?;
    write_json(&g.out.join("report.json"), report)?;
    write_text(&g.out.join("report.csv"), &report.to_csv())?;
    vocab.save(&g.out.join("vocab.tsv"))?;
    exp.models[report.best_run()].save(&g.out.join("model.ckpt"))?;
    for (r, secs) in report.runs.iter().zip(&report.wall_clock_secs) {
        eprintln!(
            "run {}: f1 {:.4} accuracy {:.4} ({secs:.1}s)",
            r.run, r.metrics.f1, r.metrics.accuracy
        );
    }
    let m = &report.mean;
    println!(
        "{}: precision {:.4} recall {:.4} f1 {:.4} (std {:.4}) accuracy {:.4}",
        report.model_config.mode, m.precision, m.recall, m.f1, m.f1_std, m.accuracy
    );
    Ok(())
}

struct LoadedModel {
    encoder: Encoder,
    vocab: Vocab,
    corpus: Vec<Sentence>,
    db: Option<FeatureDb>,
}

fn load_model(files: &ModelFiles) -> Result<LoadedModel, Error> {
    let encoder = Encoder::load(&files.checkpoint)?;
    let vocab_path = files
        .vocab
        .clone()
        .unwrap_or_else(|| files.checkpoint.with_file_name("vocab.tsv"));
    Ok(LoadedModel {
        encoder,
        vocab: Vocab::load(&vocab_path)?,
        corpus: load_corpus(&files.corpus)?,
        db: load_db(&files.features)?,
    })
}

/// Sentences with the given ids, in the given order.
fn select<'a>(corpus: &'a [Sentence], ids: &[String]) -> Result<Vec<&'a Sentence>, CliError> {
    ids.iter()
        .map(|id| {
            corpus
                .iter()
                .find(|s| &s.id == id)
                .ok_or_else(|| CliError::new(3, format!("unknown sentence id `{id}`")))
        })
        .collect()
}

#[derive(Serialize)]
struct EvalReport<'a> {
    model_config: &'a ModelConfig,
    sentences: usize,
    metrics: Metrics,
}

fn eval(g: &GlobalArgs, a: &EvalArgs) -> CmdResult {
    let m = load_model(&a.files)?;
    let chosen: Vec<Sentence> = match &a.report {
        Some(p) => {
            let r: RunReport = read_json(p)?;
            select(&m.corpus, &r.test_ids)?.into_iter().cloned().collect()
        }
        None => m.corpus.clone(),
    };
    let data = prepare(&chosen, &m.vocab, m.db.as_ref(), m.encoder.config())?;
    let metrics = evaluate(&m.encoder, &data)?;
    ensure_dir(&g.out)?;
    let mode = m.encoder.config().mode;
    let csv = format!(
        "mode,precision,recall,f1,accuracy\n{mode},{:.4},{:.4},{:.4},{:.4}\n",
        metrics.precision, metrics.recall, metrics.f1, metrics.accuracy
    );
    println!(
        "{mode}: precision {:.4} recall {:.4} f1 {:.4} accuracy {:.4} on {} sentences",
        metrics.precision,
        metrics.recall,
        metrics.f1,
        metrics.accuracy,
        data.len()
    );
    write_json(
        &g.out.join("eval.json"),
        &EvalReport {
            model_config: m.encoder.config(),
            sentences: data.len(),
            metrics,
        },
    )?;
    write_text(&g.out.join("eval.csv"), &csv)?;
    Ok(())
}

fn lexicon(g: &GlobalArgs, c: &LexiconCommand) -> CmdResult {
    match c {
        LexiconCommand::Build { measurements } => {
            let sentences: Vec<SentenceMeasurements> = read_jsonl(measurements)?;
            let lex = build_lexicon(
                sentences
                    .iter()
                    .flat_map(|s| s.words.iter().map(|w| (w.word.as_str(), &w.eeg))),
            )?;
            if lex.is_empty() {
                return Err(CliError::new(4, "lexicon is empty: no fixated word carries EEG".into()));
            }
            ensure_dir(&g.out)?;
            lex.save(&g.out.join("lexicon.jsonl"))?;
            println!("lexicon contains {} words", lex.len());
            Ok(())
        }
        LexiconCommand::Apply {
            lexicon,
            corpus,
            features,
        } => {
            let lex = EegLexicon::load(lexicon)?;
            if lex.is_empty() {
                return Err(CliError::new(4, format!("lexicon {} is empty", lexicon.display())));
            }
            let corpus = load_corpus(corpus)?;
            let db = load_db(features)?;
            let mut records = Vec::with_capacity(corpus.len());
            let mut coverage = String::from("id,covered,total,coverage\n");
            for s in &corpus {
                let words = s.words();
                let ls = lexicon_sentence_eeg(&words, &lex);
                if ls.covered == 0 {
                    eprintln!("warning: sentence {} has no lexicon words", s.id);
                }
                coverage.push_str(&format!("{},{},{},{:.4}\n", s.id, ls.covered, ls.total, ls.coverage()));
                let mut rec = match &db {
                    Some(db) => db.lookup(&s.id)?.clone(),
                    None => CognitiveRecord::without_measurements(s.id.clone(), words, s.label, lex.channels()),
                };
                rec.sentence_eeg = ls.vector;
                records.push(rec);
            }
            let out_db = FeatureDb::from_records(records)?;
            ensure_dir(&g.out)?;
            out_db.save(&g.out.join("features.jsonl"))?;
            write_text(&g.out.join("coverage.csv"), &coverage)?;
            println!("applied {} lexicon words to {} sentences", lex.len(), corpus.len());
            Ok(())
        }
    }
}

fn explain(g: &GlobalArgs, a: &ExplainArgs) -> CmdResult {
    let mut lime: LimeConfig = load_config(&g.config)?;
    if let Some(s) = g.seed {
        lime.seed = s;
    }
    if let Some(n) = a.samples {
        lime.n_samples = n;
    }
    if let Some(s) = a.sigma {
        lime.sigma = s;
    }
    if let Some(l) = a.lambda {
        lime.lambda = l;
    }
    if g.print_config {
        return print_json(&lime);
    }
    if a.k == 0 {
        return Err(CliError::new(2, "k must be at least 1".into()));
    }
    let m = load_model(&a.files)?;
    let ids: Vec<String> = match (&a.report, a.ids.is_empty()) {
        (_, false) => a.ids.clone(),
        (Some(p), true) => read_json::<RunReport>(p)?.test_ids,
        (None, true) => m.corpus.iter().map(|s| s.id.clone()).collect(),
    };
    let chosen = select(&m.corpus, &ids)?;
    let needs = m.encoder.config().mode.needs_features();
    let mut reports: Vec<ExplanationReport> = Vec::new();
    for s in chosen {
        let words = s.words();
        let record = if needs {
            let db = m.db.as_ref().ok_or_else(|| Error::MissingRecord(s.id.clone()))?;
            Some(db.lookup(&s.id)?)
        } else {
            None
        };
        let r = explain_sentence(&m.encoder, &m.vocab, &s.id, &words, record, a.k, &lime)?;
        if a.correct_only && r.predicted_class != s.label {
            continue;
        }
        reports.push(r);
    }
    let summary = OverlapSummary::over(&reports, a.k);
    ensure_dir(&g.out)?;
    let heat = g.out.join("heatmaps");
    ensure_dir(&heat)?;
    for r in &reports {
        write_text(&heat.join(format!("{}.csv", r.sentence_id)), &r.heatmap_csv())?;
    }
    write_jsonl(&g.out.join("explanations.jsonl"), &reports)?;
    write_json(&g.out.join("overlap.json"), &summary)?;
    println!(
        "{} sentences explained, mean overlap@{} {:.4}",
        summary.sentences, summary.k, summary.mean_overlap
    );
    Ok(())
}

#[derive(Serialize)]
struct ModeCheck {
    mode: AugmentationMode,
    max_rel_error: f64,
    entries: usize,
    failing: Vec<String>,
}

#[derive(Serialize)]
struct GradcheckReport<'a> {
    config: &'a ModelConfig,
    eps: f64,
    tolerance: f64,
    modes: Vec<ModeCheck>,
}

/// Two random sentences with random cognitive records for `cfg`.
fn gradcheck_batch(cfg: &ModelConfig, seed: u64) -> Result<Vec<(ModelInput, usize)>, Error> {
    let mut rng = SeededRng::new(seed).derive("gradcheck");
    let words: Vec<String> = (0..8).map(|i| format!("g{i}")).collect();
    let vocab = Vocab::build(&[words.join(" ")], 1);
    let mut batch = Vec::new();
    for n in [cfg.max_len.saturating_sub(2).min(5).max(1), 3.min(cfg.max_len - 2).max(1)] {
        let w: Vec<String> = (0..n).map(|_| words[rng.below(words.len())].clone()).collect();
        let n_fix: Vec<u32> = (0..n).map(|_| rng.below(4) as u32).collect();
        let tok = |rng: &mut SeededRng, f: u32| if f == 0 { 0 } else { 1 + rng.below(100) as u8 };
        let eye = n_fix.iter().map(|&f| tok(&mut rng, f)).collect();
        let eeg = n_fix.iter().map(|&f| tok(&mut rng, f)).collect();
        let rec = CognitiveRecord {
            id: format!("g{}", batch.len()),
            tokens: w.clone(),
            label: rng.below(cfg.n_classes),
            n_fixations: n_fix,
            eye_tokens: eye,
            eeg_tokens: eeg,
            sentence_eeg: (0..cfg.eeg_channels).map(|_| rng.uniform_range(-1.0, 2.0)).collect(),
        };
        let label = rec.label;
        batch.push((ModelInput::new(&w, Some(&rec), &vocab, cfg)?, label));
    }
    Ok(batch)
}

fn gradcheck(g: &GlobalArgs, eps: f64, tolerance: f64) -> CmdResult {
    let mut cfg: ModelConfig = match &g.config {
        Some(_) => load_config(&g.config)?,
        None => ModelConfig {
            init_std: 0.3,
            ..ModelConfig::tiny()
        },
    };
    cfg.dropout = 0.0;
    if g.print_config {
        return print_json(&cfg);
    }
    if cfg.layers > 2 || cfg.d_model > 32 {
        return Err(CliError::new(2, "gradcheck needs a tiny config (layers <= 2, d_model <= 32)".into()));
    }
    let seed = g.seed.unwrap_or(DEFAULT_SEED);
    let modes: Vec<AugmentationMode> = match g.mode {
        Some(m) => vec![m],
        None => AugmentationMode::ALL.to_vec(),
    };
    let mut checks = Vec::new();
    for mode in modes {
        let mc = ModelConfig { mode, ..cfg.clone() };
        let batch = gradcheck_batch(&mc, seed)?;
        let mut enc = Encoder::random(mc, seed)?;
        let r = enc.grad_check(&batch, eps)?;
        let failing: Vec<String> = r.failing(tolerance).iter().map(|p| p.name.clone()).collect();
        println!(
            "{mode:<15} max relative error {:.3e} {}",
            r.max_rel_error,
            if failing.is_empty() { "ok" } else { "FAIL" }
        );
        checks.push(ModeCheck {
            mode,
            max_rel_error: r.max_rel_error,
            entries: r.entries_checked,
            failing,
        });
    }
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.failing.is_empty())
        .map(|c| format!("{}: {}", c.mode, c.failing.join(", ")))
        .collect();
    ensure_dir(&g.out)?;
    write_json(
        &g.out.join("gradcheck.json"),
        &GradcheckReport {
            config: &cfg,
            eps,
            tolerance,
            modes: checks,
        },
    )?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::new(1, format!("gradients above tolerance: {}", failed.join("; "))))
    }
}

fn report(g: &GlobalArgs, inputs: &[PathBuf]) -> CmdResult {
    let mut csv = String::from("mode,runs,precision,recall,f1,f1_std,accuracy\n");
    for p in inputs {
        let r: RunReport = read_json(p)?;
        let m = &r.mean;
        csv.push_str(&format!(
            "{},{},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
            r.model_config.mode,
            r.runs.len(),
            m.precision,
            m.recall,
            m.f1,
            m.f1_std,
            m.accuracy
        ));
    }
    ensure_dir(&g.out)?;
    write_text(&g.out.join("summary.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}
