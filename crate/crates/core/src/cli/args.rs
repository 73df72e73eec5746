use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::model::AugmentationMode;

#[derive(Debug, Parser)]
#[command(name = "cogbert", version, about = "Cognitively augmented BERT-style classifier")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Master seed for every random choice the command makes.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// JSON config for the command (synth, train, explain or gradcheck settings).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Augmentation mode (none, eeg_embed, eye_embed, both_embed, cog_mask, pool_concat, pool_concat_nn, pool_multiply, pool_add_nn)
    #[arg(long, global = true)]
    pub mode: Option<AugmentationMode>,
    /// Independent training runs
    #[arg(long, global = true)]
    pub repeats: Option<usize>,
    /// Training epochs per run
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Generate a synthetic planted-keyword corpus with measurements.
    Synth {
        /// Use the distractor variant.
        #[arg(long)]
        distractor: bool,
        #[arg(long)]
        sentences: Option<usize>,
    },
    /// Derive the cognitive feature database from word-level measurements.
    Features {
        #[arg(long)]
        measurements: PathBuf,
    },
    /// Fine-tune with the repeated-run protocol.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a corpus.
    Eval(EvalArgs),
    /// Build or apply a word-EEG lexicon.
    #[command(subcommand)]
    Lexicon(LexiconCommand),
    /// Attention and LIME explanations for trained-model predictions.
    Explain(ExplainArgs),
    /// Finite-difference gradient check of every augmentation mode.
    Gradcheck {
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
    /// Collect run reports into one comparison table.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// JSON model configuration.
    #[arg(long)]
    pub model_config: Option<PathBuf>,
    /// Random init, 5 repeats of 10 epochs.
    #[arg(long)]
    pub robustness: bool,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Initialize matching tensors from this checkpoint.
    #[arg(long)]
    pub init: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelFiles {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Defaults to `vocab.tsv` next to the checkpoint.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub features: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub files: ModelFiles,
    /// Restrict to the test ids of this run report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum LexiconCommand {
    Build {
        #[arg(long)]
        measurements: PathBuf,
    },
    Apply {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Existing feature database whose sentence EEG is replaced.
        #[arg(long)]
        features: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub files: ModelFiles,
    /// Comma-separated sentence ids.
    #[arg(long, value_delimiter = ',')]
    pub ids: Vec<String>,
    /// Explain the test sentences of this run report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Keep only sentences the model classifies correctly.
    #[arg(long)]
    pub correct_only: bool,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
}
