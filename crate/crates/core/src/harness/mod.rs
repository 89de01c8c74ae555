//! Experiment orchestration: configuration, training, evaluation, baselines
//! and on-disk artifacts.

mod checkpoint;
mod config;
mod eval;
mod train;

pub use checkpoint::{load_agent, save_agent, CheckpointMeta};
pub use config::{RunConfig, Scenario};
pub use eval::{baseline, evaluate, evaluate_agent, EvalReport, OpinionSummary, ReportKind};
pub use train::{read_train_log, train, write_train_log, EpisodeLog, TrainOutcome};
