//! Downstream evaluation of frozen embeddings: recognition error rates,
//! emotion classification, length analysis and 2-D projection.

pub mod asr;
pub mod edit;
pub mod emotion;
pub mod length;
pub mod metrics;
pub mod projection;
pub mod report;
pub mod stats;
pub mod svm;

pub use asr::{eval_asr, pair_samples, AsrConfig, AsrDecoder, AsrOutcome, AsrSample, UtteranceScore};
pub use edit::{corpus_error_rate, edit_distance, error_rate, EditCounts};
pub use emotion::{eval_emotion, EmotionConfig};
pub use length::{bucket_trend, length_bucket_analysis, quantile_buckets, BucketTrend};
pub use metrics::ConfusionMatrix;
pub use projection::{cluster_purity, kmeans, pca_2d, project_2d, tsne_2d, ProjectionMethod, TsneConfig};
pub use report::{buckets_csv, projection_csv, BucketRow, EvalReport, Metric, Task};
pub use svm::{LinearSvm, SvmConfig};
