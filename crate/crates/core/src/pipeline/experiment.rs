use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::data::{corpus_vocab, raw_mels, Dataset};
use super::train::{embed_dataset, train_model, LogLine};
use crate::corpus::{generate_corpus, split_indices, Emotion, SentenceRecord};
use crate::dsp::{FeatureStats, MelSpectrogram};
use crate::error::{invalid, Result};
use crate::eval::stats::{column_moments, standardize};
use crate::eval::{
    bucket_trend, buckets_csv, cluster_purity, eval_asr, eval_emotion, kmeans, length_bucket_analysis,
    pair_samples, pca_2d, projection_csv, quantile_buckets, tsne_2d, BucketRow, EvalReport, ProjectionMethod,
    TsneConfig,
};
use crate::fusion::{fuse_uniform_average, train_segment_embeddings, Level, SegmentEmbeddingTable};
use crate::model::{ModelKind, Vocab};

/// One row of the comparison table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowKind {
    PhonemeAverage,
    PhonemeDan,
    WordAverage,
    WordDan,
    SentenceRnn,
    SentenceTcn,
}

impl RowKind {
    pub const ALL: [RowKind; 6] = [
        RowKind::PhonemeAverage,
        RowKind::PhonemeDan,
        RowKind::WordAverage,
        RowKind::WordDan,
        RowKind::SentenceRnn,
        RowKind::SentenceTcn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RowKind::PhonemeAverage => "phoneme-average",
            RowKind::PhonemeDan => "phoneme-dan",
            RowKind::WordAverage => "word-average",
            RowKind::WordDan => "word-dan",
            RowKind::SentenceRnn => "sentence-rnn",
            RowKind::SentenceTcn => "sentence-tcn",
        }
    }

    pub fn level(self) -> Option<Level> {
        match self {
            RowKind::PhonemeAverage | RowKind::PhonemeDan => Some(Level::Phoneme),
            RowKind::WordAverage | RowKind::WordDan => Some(Level::Word),
            RowKind::SentenceRnn | RowKind::SentenceTcn => None,
        }
    }

    pub fn model_kind(self) -> Option<ModelKind> {
        match self {
            RowKind::PhonemeDan => Some(ModelKind::DanPhoneme),
            RowKind::WordDan => Some(ModelKind::DanWord),
            RowKind::SentenceRnn => Some(ModelKind::Rnn),
            RowKind::SentenceTcn => Some(ModelKind::Tcn),
            RowKind::PhonemeAverage | RowKind::WordAverage => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowResult {
    pub row: RowKind,
    pub asr: EvalReport,
    pub emotion: EvalReport,
    pub buckets: Vec<BucketRow>,
    pub length_spearman: Option<f64>,
    pub length_slope: Option<f64>,
    pub cluster_purity: f64,
    pub projection: Vec<[f64; 2]>,
    pub projection_labels: Vec<String>,
    #[serde(default)]
    pub train_log: Vec<LogLine>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub seed: u64,
    pub config_hash: String,
    pub rows: Vec<RowResult>,
}

impl ExperimentOutcome {
    pub fn row(&self, kind: RowKind) -> Result<&RowResult> {
        self.rows
            .iter()
            .find(|r| r.row == kind)
            .ok_or_else(|| invalid(format!("experiment has no {} row", kind.name())))
    }

    /// Aligned-column summary, one line per row.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed {}  config {}", self.seed, self.config_hash);
        let _ = writeln!(
            s,
            "{:<16} {:>14} {:>14} {:>14} {:>10} {:>10} {:>8}",
            "row", "PER%", "WER%", "emotion acc%", "prec%", "recall%", "purity"
        );
        for r in &self.rows {
            let m = |rep: &EvalReport, k: &str| rep.metric(k).map(|m| (100.0 * m.value, 100.0 * m.ci95_halfwidth)).unwrap_or((f64::NAN, f64::NAN));
            let (per, per_ci) = m(&r.asr, "per");
            let (wer, wer_ci) = m(&r.asr, "wer");
            let (acc, acc_ci) = m(&r.emotion, "accuracy");
            let _ = writeln!(
                s,
                "{:<16} {:>7.1} ±{:>5.1} {:>7.1} ±{:>5.1} {:>7.1} ±{:>5.1} {:>10.1} {:>10.1} {:>8.3}",
                r.row.name(),
                per,
                per_ci,
                wer,
                wer_ci,
                acc,
                acc_ci,
                m(&r.emotion, "precision").0,
                m(&r.emotion, "recall").0,
                r.cluster_purity
            );
        }
        s
    }

    /// Reports, CSVs and the summary, all carrying seed and config hash.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for r in &self.rows {
            let name = r.row.name();
            r.asr.write(dir, &format!("{name}.asr"))?;
            r.emotion.write(dir, &format!("{name}.emotion"))?;
            fs::write(dir.join(format!("{name}.length.csv")), buckets_csv(&r.buckets))?;
            fs::write(
                dir.join(format!("{name}.projection.csv")),
                projection_csv(&r.projection, &r.projection_labels),
            )?;
            if !r.train_log.is_empty() {
                let mut log = String::new();
                for l in &r.train_log {
                    log.push_str(&serde_json::to_string(l)?);
                    log.push('\n');
                }
                fs::write(dir.join(format!("{name}.train.jsonl")), log)?;
            }
        }
        let summary = serde_json::json!({
            "seed": self.seed,
            "config_hash": self.config_hash,
            "rows": self.rows.iter().map(|r| serde_json::json!({
                "row": r.row,
                "per": r.asr.metrics.get("per"),
                "wer": r.asr.metrics.get("wer"),
                "accuracy": r.emotion.metrics.get("accuracy"),
                "precision": r.emotion.metrics.get("precision"),
                "recall": r.emotion.metrics.get("recall"),
                "length_spearman": r.length_spearman,
                "length_slope": r.length_slope,
                "cluster_purity": r.cluster_purity,
            })).collect::<Vec<_>>(),
        });
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
        fs::write(dir.join("table.txt"), self.table())?;
        Ok(())
    }
}

/// Generated, split and featurised corpora for one experiment.
pub struct PreparedData {
    pub vocab: Vocab,
    pub stats: FeatureStats,
    pub train: Dataset,
    pub test: Dataset,
    pub emotion: Dataset,
}

pub fn prepare_data(config: &RunConfig) -> Result<PreparedData> {
    let config = config.resolved();
    let corpus = generate_corpus(&config.corpus)?;
    let emo = generate_corpus(&config.emotion_corpus)?;
    prepare_from_records(&config, corpus, emo)
}

pub fn prepare_from_records(
    config: &RunConfig,
    corpus: Vec<SentenceRecord>,
    emo: Vec<SentenceRecord>,
) -> Result<PreparedData> {
    let vocab = corpus_vocab();
    let ids: Vec<&str> = corpus.iter().map(|r| r.id.as_str()).collect();
    let (train_idx, test_idx) = split_indices(&ids, config.test_fold, config.n_folds)?;
    let mels = raw_mels(&corpus)?;
    let take = |idx: &[usize]| -> (Vec<SentenceRecord>, Vec<MelSpectrogram>) {
        (
            idx.iter().map(|i| corpus[*i].clone()).collect(),
            idx.iter().map(|i| mels[*i].clone()).collect(),
        )
    };
    let (train_r, train_m) = take(&train_idx);
    let (test_r, test_m) = take(&test_idx);
    let stats = config.feature_stats(train_m.iter())?;
    let emo_m = raw_mels(&emo)?;
    Ok(PreparedData {
        train: Dataset::new(train_r, train_m, &stats, &vocab)?,
        test: Dataset::new(test_r, test_m, &stats, &vocab)?,
        emotion: Dataset::new(emo, emo_m, &stats, &vocab)?,
        vocab,
        stats,
    })
}

struct LevelTables {
    train: Vec<Vec<Vec<f64>>>,
    test: Vec<Vec<Vec<f64>>>,
    emotion: Vec<Vec<Vec<f64>>>,
}

fn level_tables(config: &RunConfig, data: &PreparedData, level: Level) -> Result<(LevelTables, SegmentEmbeddingTable)> {
    let training = train_segment_embeddings(&data.train.sources(level), level, &config.segments)?;
    let enc = &training.encoder;
    let mut table = enc.tabulate(&data.train.sources(level))?;
    for ds in [&data.test, &data.emotion] {
        let t = enc.tabulate(&ds.sources(level))?;
        table.entries.extend(t.entries);
    }
    Ok((
        LevelTables {
            train: data.train.segments(&table)?,
            test: data.test.segments(&table)?,
            emotion: data.emotion.segments(&table)?,
        },
        table,
    ))
}

fn average_all(segments: &[Vec<Vec<f64>>]) -> Result<Vec<Vec<f64>>> {
    segments.iter().map(|s| fuse_uniform_average(s)).collect()
}

/// Runs every configured row end to end and returns the reports.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let config = config.resolved();
    let data = prepare_data(&config)?;
    run_on_data(&config, &data)
}

pub fn run_on_data(config: &RunConfig, data: &PreparedData) -> Result<ExperimentOutcome> {
    let hash = config.hash();
    let mut word = None;
    let mut phoneme = None;
    for row in &config.rows {
        match row.level() {
            Some(Level::Word) if word.is_none() => word = Some(level_tables(config, data, Level::Word)?.0),
            Some(Level::Phoneme) if phoneme.is_none() => phoneme = Some(level_tables(config, data, Level::Phoneme)?.0),
            _ => {}
        }
    }
    let buckets = quantile_buckets(&data.test.num_frames(), config.length_buckets)?;
    let class_names: Vec<&str> = Emotion::ALL.iter().map(|e| e.name()).collect();
    let emo_labels: Vec<usize> = data.emotion.records.iter().map(|r| r.emotion.index()).collect();

    let mut rows = Vec::new();
    for &row in &config.rows {
        log::info!("row {}", row.name());
        let tables = match row.level() {
            Some(Level::Word) => word.as_ref(),
            Some(Level::Phoneme) => phoneme.as_ref(),
            None => None,
        };
        let (train_e, test_e, emo_e, train_log) = match row.model_kind() {
            None => {
                let t = tables.expect("level tables built");
                (average_all(&t.train)?, average_all(&t.test)?, average_all(&t.emotion)?, Vec::new())
            }
            Some(kind) => {
                let mut mc = config.model.clone();
                mc.kind = kind;
                mc.segment_dim = config.segments.dim;
                let (model, log) = train_model(
                    &mc,
                    &data.vocab,
                    &data.train,
                    tables.map(|t| t.train.as_slice()),
                    &config.weights,
                    &config.train,
                    config.seed,
                    |l| log::debug!("{} step {} L_Total {:.4}", row.name(), l.step, l.l_total),
                )?;
                (
                    embed_dataset(&model, &data.train, tables.map(|t| t.train.as_slice()))?,
                    embed_dataset(&model, &data.test, tables.map(|t| t.test.as_slice()))?,
                    embed_dataset(&model, &data.emotion, tables.map(|t| t.emotion.as_slice()))?,
                    log,
                )
            }
        };
        log::info!("row {} embedded", row.name());
        rows.push(evaluate_row(config, data, row, &hash, &buckets, &class_names, &emo_labels, train_e, test_e, emo_e, train_log)?);
    }
    Ok(ExperimentOutcome {
        seed: config.seed,
        config_hash: hash,
        rows,
    })
}

/// Standardises, projects to 2-D, runs k-means with one cluster per
/// emotion and scores purity. Returns `(points, clusters, purity)`.
pub fn emotion_clusters(
    embeddings: &[Vec<f64>],
    labels: &[usize],
    method: ProjectionMethod,
    tsne: &TsneConfig,
    seed: u64,
) -> Result<(Vec<[f64; 2]>, Vec<usize>, f64)> {
    let (m, s) = column_moments(embeddings)?;
    let z = standardize(embeddings, &m, &s);
    let projection = match method {
        ProjectionMethod::Tsne => tsne_2d(&z, tsne, seed)?,
        ProjectionMethod::Pca => pca_2d(&z)?,
    };
    let points: Vec<Vec<f64>> = projection.iter().map(|p| p.to_vec()).collect();
    let assign = kmeans(&points, Emotion::ALL.len(), 10, seed)?;
    let purity = cluster_purity(&assign, labels)?;
    Ok((projection, assign, purity))
}

#[allow(clippy::too_many_arguments)]
fn evaluate_row(
    config: &RunConfig,
    data: &PreparedData,
    row: RowKind,
    hash: &str,
    buckets: &[(usize, usize)],
    class_names: &[&str],
    emo_labels: &[usize],
    train_e: Vec<Vec<f64>>,
    test_e: Vec<Vec<f64>>,
    emo_e: Vec<Vec<f64>>,
    train_log: Vec<LogLine>,
) -> Result<RowResult> {
    let train_s = pair_samples(&data.train.ids(), &train_e, &data.train.targets, &data.train.num_frames())?;
    let test_s = pair_samples(&data.test.ids(), &test_e, &data.test.targets, &data.test.num_frames())?;
    let outcome = eval_asr(&train_s, &test_s, data.vocab.len(), &config.asr)?;
    log::info!("row {} asr done", row.name());
    let bucket_rows = length_bucket_analysis(&outcome.scores, buckets)?;
    let trend = bucket_trend(&bucket_rows).ok();
    let mut asr = outcome.report;
    asr.model = row.name().to_string();
    asr.config_hash = hash.to_string();
    asr.per_length_bucket = Some(bucket_rows.clone());

    let mut emotion = eval_emotion(&emo_e, emo_labels, &data.emotion.ids(), class_names, &config.emotion)?;
    emotion.model = row.name().to_string();
    emotion.config_hash = hash.to_string();

    let (projection, _, purity) = emotion_clusters(&emo_e, emo_labels, ProjectionMethod::Tsne, &config.tsne, config.seed)?;
    Ok(RowResult {
        row,
        asr,
        emotion,
        buckets: bucket_rows,
        length_spearman: trend.map(|t| t.spearman),
        length_slope: trend.map(|t| t.slope),
        cluster_purity: purity,
        projection,
        projection_labels: data.emotion.records.iter().map(|r| r.emotion.name().to_string()).collect(),
        train_log,
    })
}
