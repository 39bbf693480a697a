//! End-to-end runs: corpus generation, training, embedding and evaluation
//! driven by one serialisable [`RunConfig`].

pub mod config;
pub mod data;
pub mod experiment;
pub mod train;

pub use config::{Paths, RunConfig, TrainConfig};
pub use data::{corpus_vocab, raw_mels, Dataset};
pub use experiment::{emotion_clusters, prepare_data, prepare_from_records, run_experiment, run_on_data, ExperimentOutcome, PreparedData, RowKind, RowResult};
pub use train::{embed_dataset, examples, train_model, train_on_examples, LogLine};
