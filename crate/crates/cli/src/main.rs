use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use sembed_core::checkpoint::{load_model, save_model};
use sembed_core::corpus::{generate_corpus, read_corpus, split_indices, write_corpus, Emotion, SentenceRecord};
use sembed_core::dsp::FeatureStats;
use sembed_core::eval::{
    bucket_trend, buckets_csv, eval_asr, eval_emotion, length_bucket_analysis, projection_csv, quantile_buckets,
    AsrSample, EvalReport, ProjectionMethod, UtteranceScore,
};
use sembed_core::fusion::{fuse_uniform_average, train_segment_embeddings, Level, SegmentEncoder};
use sembed_core::model::{ModelKind, SentenceModel};
use sembed_core::pipeline::{corpus_vocab, embed_dataset, emotion_clusters, raw_mels, run_experiment, train_model, Dataset, RunConfig};

#[derive(Parser)]
#[command(name = "sembed", version, about = "Spoken sentence embeddings on a synthetic speech corpus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// JSON run configuration. Flags override values read from it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the small desk-scale preset instead of the full defaults.
    #[arg(long, conflicts_with = "config")]
    desk: bool,
    /// Seed for every random choice in the command.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, self.desk) {
            (Some(path), _) => RunConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
            (None, true) => RunConfig::desk(),
            (None, false) => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        let cfg = cfg.resolved();
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LevelArg {
    Word,
    Phoneme,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Word => Level::Word,
            LevelArg::Phoneme => Level::Phoneme,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Tcn,
    Rnn,
    DanWord,
    DanPhoneme,
}

impl ModelArg {
    fn kind(self) -> ModelKind {
        match self {
            ModelArg::Tcn => ModelKind::Tcn,
            ModelArg::Rnn => ModelKind::Rnn,
            ModelArg::DanWord => ModelKind::DanWord,
            ModelArg::DanPhoneme => ModelKind::DanPhoneme,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FusionArg {
    None,
    Average,
    Dan,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Tsne,
    Pca,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus (WAV files plus a JSONL manifest).
    GenData {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sentences: Option<usize>,
        /// Use the emotion-corpus settings (fixed transcripts, balanced labels).
        #[arg(long)]
        emotion: bool,
    },
    /// Train a segment encoder on the training split and tabulate the corpus.
    TrainSegments {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        level: LevelArg,
        #[arg(long)]
        corpus: PathBuf,
        /// Encoder checkpoint to write.
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-occurrence table for the whole corpus here.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Train a sentence model under the multitask loss on the training split.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Segment encoder checkpoint; required by the DAN models.
        #[arg(long)]
        segments: Option<PathBuf>,
        #[arg(long)]
        lambda_acoustic: Option<f64>,
        #[arg(long)]
        lambda_linguistic: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// JSONL training log; defaults to `<out>.train.jsonl`.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Write one frozen embedding per utterance as JSONL.
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        fusion: FusionArg,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        segments: Option<PathBuf>,
    },
    /// Fit a fresh decoder on train-split embeddings and score the test split.
    EvalAsr {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Report file stem; defaults to the embeddings file stem.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Cross-validated linear SVM emotion classification.
    EvalEmotion {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
    /// PER by utterance-length bucket from `eval-asr` scores.
    AnalyzeLength {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        buckets: Option<usize>,
        #[arg(long)]
        name: Option<String>,
    },
    /// 2-D projection of emotion-corpus embeddings with k-means purity.
    Project {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "tsne")]
        method: MethodArg,
        #[arg(long)]
        name: Option<String>,
    },
    /// Print the resolved run configuration as JSON (or write it to --out).
    Config {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every table row end to end on freshly generated corpora.
    Experiment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Serialize, Deserialize)]
struct EmbeddingLine {
    id: String,
    split: String,
    embedding: Vec<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads().and_then(|_| run(cli.command)) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("SEMBED_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| anyhow!("SEMBED_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenData {
            common,
            out,
            sentences,
            emotion,
        } => {
            let cfg = common.run_config()?;
            let mut gc = if emotion { cfg.emotion_corpus } else { cfg.corpus };
            if let Some(n) = sentences {
                gc.num_sentences = n;
            }
            let records = generate_corpus(&gc)?;
            let manifest = write_corpus(&out, &records)?;
            println!("wrote {} sentences to {}", records.len(), manifest.display());
        }
        Command::TrainSegments {
            common,
            level,
            corpus,
            out,
            table,
            steps,
        } => {
            let mut cfg = common.run_config()?;
            if let Some(s) = steps {
                cfg.segments.steps = s;
            }
            let level = Level::from(level);
            let split = load_split(&corpus, &cfg)?;
            let train = split.dataset(Some(true))?;
            let training = train_segment_embeddings(&train.sources(level), level, &cfg.segments)?;
            let meta = json!({
                "feature_stats": split.stats,
                "seed": cfg.seed,
                "config_hash": cfg.hash(),
                "losses": training.losses,
            });
            training.encoder.save(&out, meta)?;
            if let Some(path) = table {
                let all = split.dataset(None)?;
                training.encoder.tabulate(&all.sources(level))?.save(&path)?;
            }
            println!(
                "trained {} segment encoder, final loss {:.4}",
                level.name(),
                training.losses.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::Train {
            common,
            model,
            corpus,
            out,
            segments,
            lambda_acoustic,
            lambda_linguistic,
            steps,
            lr,
            log,
        } => {
            let mut cfg = common.run_config()?;
            if let Some(v) = lambda_acoustic {
                cfg.weights.lambda_acoustic = v;
            }
            if let Some(v) = lambda_linguistic {
                cfg.weights.lambda_linguistic = v;
            }
            if let Some(v) = steps {
                cfg.train.steps = v;
            }
            if let Some(v) = lr {
                cfg.train.learning_rate = v;
            }
            cfg.validate()?;
            let kind = model.kind();
            let split = load_split(&corpus, &cfg)?;
            let train = split.dataset(Some(true))?;
            let mut mc = cfg.model.clone();
            mc.kind = kind;
            let encoder = match (kind.level(), &segments) {
                (Some(level), Some(path)) => {
                    let (enc, meta) = SegmentEncoder::load(path)?;
                    if enc.level != level {
                        bail!("{} needs a {} segment encoder, got {}", kind.name(), level.name(), enc.level.name());
                    }
                    mc.segment_dim = enc.dim();
                    Some((enc, stats_from(&meta)?))
                }
                (Some(_), None) => bail!("--segments is required for {}", kind.name()),
                (None, Some(_)) => bail!("{} does not take segment vectors", kind.name()),
                (None, None) => None,
            };
            let seg = match &encoder {
                Some((enc, stats)) => Some(segment_vectors(enc, stats, &split, Some(true))?),
                None => None,
            };
            let log_path = log.unwrap_or_else(|| with_suffix(&out, ".train.jsonl"));
            let mut log_file = BufWriter::new(fs::File::create(&log_path).with_context(|| log_path.display().to_string())?);
            let mut write_err = None;
            let (trained, lines) = train_model(
                &mc,
                &split.vocab(),
                &train,
                seg.as_deref(),
                &cfg.weights,
                &cfg.train,
                cfg.seed,
                |l| {
                    let line = serde_json::to_string(l).expect("log line serialises");
                    if let Err(e) = writeln!(log_file, "{line}") {
                        write_err.get_or_insert(e);
                    }
                },
            )?;
            if let Some(e) = write_err {
                return Err(e).context("writing training log");
            }
            log_file.flush()?;
            let meta = json!({
                "feature_stats": split.stats,
                "seed": cfg.seed,
                "config_hash": cfg.hash(),
                "weights": cfg.weights,
                "steps": cfg.train.steps,
            });
            save_model(&out, &trained, meta)?;
            if let Some(last) = lines.last() {
                println!(
                    "trained {} for {} steps: L_a {:.4} L_l {:.4} L_Total {:.4}",
                    kind.name(),
                    last.step,
                    last.l_a,
                    last.l_l,
                    last.l_total
                );
            }
        }
        Command::Embed {
            common,
            corpus,
            out,
            fusion,
            model,
            segments,
        } => {
            let cfg = common.run_config()?;
            let split = load_split(&corpus, &cfg)?;
            let vectors = match fusion {
                FusionArg::Average => {
                    if model.is_some() {
                        bail!("--fusion average uses --segments only");
                    }
                    let path = segments.as_ref().ok_or_else(|| anyhow!("--fusion average needs --segments"))?;
                    let (enc, meta) = SegmentEncoder::load(path)?;
                    segment_vectors(&enc, &stats_from(&meta)?, &split, None)?
                        .iter()
                        .map(|s| fuse_uniform_average(s))
                        .collect::<sembed_core::Result<Vec<_>>>()?
                }
                FusionArg::None | FusionArg::Dan => {
                    let path = model.as_ref().ok_or_else(|| anyhow!("--fusion {fusion:?} needs --model"))?;
                    let (m, meta) = load_model(path)?;
                    let kind = m.config().kind;
                    if kind.uses_segments() != (fusion == FusionArg::Dan) {
                        bail!("a {} checkpoint does not match --fusion {:?}", kind.name(), fusion);
                    }
                    embed_with_model(&m, &stats_from(&meta)?, &split, segments.as_deref())?
                }
            };
            let mut w = BufWriter::new(fs::File::create(&out).with_context(|| out.display().to_string())?);
            for (i, (r, v)) in split.records.iter().zip(vectors).enumerate() {
                let line = EmbeddingLine {
                    id: r.id.clone(),
                    split: if split.is_train[i] { "train" } else { "test" }.into(),
                    embedding: v,
                };
                writeln!(w, "{}", serde_json::to_string(&line)?)?;
            }
            w.flush()?;
            println!("wrote {} embeddings to {}", split.records.len(), out.display());
        }
        Command::EvalAsr {
            common,
            embeddings,
            corpus,
            out_dir,
            name,
            steps,
        } => {
            let mut cfg = common.run_config()?;
            if let Some(s) = steps {
                cfg.asr.steps = s;
            }
            let name = name.unwrap_or_else(|| file_stem(&embeddings));
            let lines = read_embeddings(&embeddings)?;
            let records = read_corpus(&corpus)?;
            let by_id: HashMap<&str, &SentenceRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
            let vocab = corpus_vocab();
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for l in lines {
                let r = by_id
                    .get(l.id.as_str())
                    .ok_or_else(|| anyhow!("{} is not in the corpus", l.id))?;
                let sample = AsrSample {
                    target: vocab.encode_words(&r.words())?,
                    num_frames: r.num_frames(),
                    id: l.id,
                    embedding: l.embedding,
                };
                match l.split.as_str() {
                    "train" => train.push(sample),
                    "test" => test.push(sample),
                    other => bail!("unknown split {other:?}"),
                }
            }
            let outcome = eval_asr(&train, &test, vocab.len(), &cfg.asr)?;
            let mut report = outcome.report;
            stamp(&mut report, &name, &cfg);
            fs::create_dir_all(&out_dir)?;
            report.write(&out_dir, &format!("{name}.asr"))?;
            let scores_path = out_dir.join(format!("{name}.scores.jsonl"));
            let mut w = BufWriter::new(fs::File::create(&scores_path)?);
            for s in &outcome.scores {
                writeln!(w, "{}", serde_json::to_string(s)?)?;
            }
            w.flush()?;
            println!(
                "{name}: PER {:.2}% WER {:.2}%",
                100.0 * report.metric("per")?.value,
                100.0 * report.metric("wer")?.value
            );
        }
        Command::EvalEmotion {
            common,
            embeddings,
            corpus,
            out_dir,
            name,
        } => {
            let cfg = common.run_config()?;
            let name = name.unwrap_or_else(|| file_stem(&embeddings));
            let (ids, vectors, labels) = labelled_embeddings(&embeddings, &corpus)?;
            let class_names: Vec<&str> = Emotion::ALL.iter().map(|e| e.name()).collect();
            let mut report = eval_emotion(&vectors, &labels, &ids, &class_names, &cfg.emotion)?;
            stamp(&mut report, &name, &cfg);
            fs::create_dir_all(&out_dir)?;
            report.write(&out_dir, &format!("{name}.emotion"))?;
            println!("{name}: emotion accuracy {:.2}%", 100.0 * report.metric("accuracy")?.value);
        }
        Command::AnalyzeLength {
            common,
            scores,
            out_dir,
            buckets,
            name,
        } => {
            let cfg = common.run_config()?;
            let name = name.unwrap_or_else(|| file_stem(&scores).trim_end_matches(".scores").to_string());
            let scores: Vec<UtteranceScore> = read_jsonl(&scores)?;
            let lengths: Vec<usize> = scores.iter().map(|s| s.num_frames).collect();
            let edges = quantile_buckets(&lengths, buckets.unwrap_or(cfg.length_buckets))?;
            let rows = length_bucket_analysis(&scores, &edges)?;
            let trend = bucket_trend(&rows).ok();
            fs::create_dir_all(&out_dir)?;
            fs::write(out_dir.join(format!("{name}.length.csv")), buckets_csv(&rows))?;
            let summary = json!({
                "model": name,
                "seed": cfg.seed,
                "config_hash": cfg.hash(),
                "buckets": rows,
                "spearman": trend.map(|t| t.spearman),
                "slope": trend.map(|t| t.slope),
            });
            fs::write(out_dir.join(format!("{name}.length.json")), serde_json::to_string_pretty(&summary)? + "\n")?;
            for r in &rows {
                println!("frames [{}, {}): n={} PER {:.2}%", r.lo, r.hi, r.n, 100.0 * r.per);
            }
            if let Some(t) = trend {
                println!("spearman {:.3} slope {:.4}", t.spearman, t.slope);
            }
        }
        Command::Project {
            common,
            embeddings,
            corpus,
            out_dir,
            method,
            name,
        } => {
            let cfg = common.run_config()?;
            let name = name.unwrap_or_else(|| file_stem(&embeddings));
            let (_, vectors, labels) = labelled_embeddings(&embeddings, &corpus)?;
            let method = match method {
                MethodArg::Tsne => ProjectionMethod::Tsne,
                MethodArg::Pca => ProjectionMethod::Pca,
            };
            let (points, clusters, purity) = emotion_clusters(&vectors, &labels, method, &cfg.tsne, cfg.seed)?;
            let label_names: Vec<String> = labels.iter().map(|l| Emotion::ALL[*l].name().to_string()).collect();
            fs::create_dir_all(&out_dir)?;
            fs::write(out_dir.join(format!("{name}.projection.csv")), projection_csv(&points, &label_names))?;
            let summary = json!({
                "model": name,
                "seed": cfg.seed,
                "config_hash": cfg.hash(),
                "method": method,
                "clusters": clusters,
                "purity": purity,
                "chance": 1.0 / Emotion::ALL.len() as f64,
            });
            fs::write(out_dir.join(format!("{name}.projection.json")), serde_json::to_string_pretty(&summary)? + "\n")?;
            println!("{name}: cluster purity {purity:.3}");
        }
        Command::Config { common, out } => {
            let cfg = common.run_config()?;
            match out {
                Some(path) => cfg.save(&path)?,
                None => println!("{}", serde_json::to_string_pretty(&cfg)?),
            }
        }
        Command::Experiment { common, out_dir } => {
            let cfg = common.run_config()?;
            let outcome = run_experiment(&cfg)?;
            outcome.write(&out_dir)?;
            print!("{}", outcome.table());
        }
    }
    Ok(())
}

/// A corpus read from disk with its fold split and training-split feature
/// statistics.
struct Split {
    records: Vec<SentenceRecord>,
    is_train: Vec<bool>,
    stats: FeatureStats,
    mels: Vec<sembed_core::dsp::MelSpectrogram>,
}

impl Split {
    fn vocab(&self) -> sembed_core::model::Vocab {
        corpus_vocab()
    }

    /// `Some(true)` selects the training split, `Some(false)` the test
    /// split, `None` everything.
    fn indices(&self, train: Option<bool>) -> Vec<usize> {
        (0..self.records.len())
            .filter(|i| train.map_or(true, |t| self.is_train[*i] == t))
            .collect()
    }

    fn dataset_with(&self, train: Option<bool>, stats: &FeatureStats) -> Result<Dataset> {
        let idx = self.indices(train);
        let records = idx.iter().map(|i| self.records[*i].clone()).collect();
        let mels = idx.iter().map(|i| self.mels[*i].clone()).collect();
        Ok(Dataset::new(records, mels, stats, &self.vocab())?)
    }

    fn dataset(&self, train: Option<bool>) -> Result<Dataset> {
        self.dataset_with(train, &self.stats)
    }
}

fn load_split(corpus: &Path, cfg: &RunConfig) -> Result<Split> {
    let records = read_corpus(corpus).with_context(|| format!("reading corpus {}", corpus.display()))?;
    if records.is_empty() {
        bail!("corpus {} is empty", corpus.display());
    }
    let ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
    let (train_idx, _) = split_indices(&ids, cfg.test_fold, cfg.n_folds)?;
    let mut is_train = vec![false; records.len()];
    for i in &train_idx {
        is_train[*i] = true;
    }
    let mels = raw_mels(&records)?;
    let train_mels: Vec<_> = train_idx.iter().map(|i| &mels[*i]).collect();
    let stats = cfg.feature_stats(train_mels)?;
    Ok(Split {
        records,
        is_train,
        stats,
        mels,
    })
}

fn stats_from(meta: &serde_json::Value) -> Result<FeatureStats> {
    serde_json::from_value(meta["feature_stats"].clone()).context("checkpoint metadata has no feature statistics")
}

fn segment_vectors(
    enc: &SegmentEncoder,
    stats: &FeatureStats,
    split: &Split,
    train: Option<bool>,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let ds = split.dataset_with(train, stats)?;
    let table = enc.tabulate(&ds.sources(enc.level))?;
    Ok(ds.segments(&table)?)
}

fn embed_with_model(model: &SentenceModel, stats: &FeatureStats, split: &Split, segments: Option<&Path>) -> Result<Vec<Vec<f64>>> {
    let ds = split.dataset_with(None, stats)?;
    let seg = match (model.config().kind.level(), segments) {
        (Some(level), Some(path)) => {
            let (enc, meta) = SegmentEncoder::load(path)?;
            if enc.level != level {
                bail!("model expects {} segments, encoder is {}", level.name(), enc.level.name());
            }
            Some(segment_vectors(&enc, &stats_from(&meta)?, split, None)?)
        }
        (Some(_), None) => bail!("--segments is required for a {} checkpoint", model.config().kind.name()),
        (None, _) => None,
    };
    Ok(embed_dataset(model, &ds, seg.as_deref())?)
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let f = fs::File::open(path).with_context(|| path.display().to_string())?;
    BufReader::new(f)
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|(n, l)| {
            let l = l?;
            serde_json::from_str(&l).with_context(|| format!("{} line {}", path.display(), n + 1))
        })
        .collect()
}

fn read_embeddings(path: &Path) -> Result<Vec<EmbeddingLine>> {
    let lines: Vec<EmbeddingLine> = read_jsonl(path)?;
    if lines.is_empty() {
        bail!("{} holds no embeddings", path.display());
    }
    Ok(lines)
}

/// Embeddings in file order with their emotion labels from the corpus.
fn labelled_embeddings(embeddings: &Path, corpus: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>, Vec<usize>)> {
    let lines = read_embeddings(embeddings)?;
    let records = read_corpus(corpus)?;
    let by_id: HashMap<&str, &SentenceRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut labels = Vec::with_capacity(lines.len());
    for l in &lines {
        let r = by_id
            .get(l.id.as_str())
            .ok_or_else(|| anyhow!("{} is not in the corpus", l.id))?;
        labels.push(r.emotion.index());
    }
    let ids = lines.iter().map(|l| l.id.clone()).collect();
    Ok((ids, lines.into_iter().map(|l| l.embedding).collect(), labels))
}

fn stamp(report: &mut EvalReport, name: &str, cfg: &RunConfig) {
    report.model = name.to_string();
    report.seed = cfg.seed;
    report.config_hash = cfg.hash();
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
