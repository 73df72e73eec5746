//! Fine-tuning loop, optimizer, repeated-run protocol and metrics.

mod config;
mod metrics;
mod optim;
mod run;

pub use config::{InitSource, TrainConfig};
pub use metrics::{sample_std, ClassCounts, Metrics, Summary};
pub use optim::{lr_at, AdamW};
pub use run::{
    evaluate, init_encoder, mean_loss, predict_all, prepare, repeat_runs, resolve_model_config,
    run_experiment, run_seed, split, train, train_step, Example, Experiment, RunEntry, RunReport,
    TrainOutcome,
};
