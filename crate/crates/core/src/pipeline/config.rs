use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::GenerateConfig;
use crate::dsp::{FeatureStats, MelSpectrogram};
use crate::error::{invalid, Result};
use crate::eval::{AsrConfig, EmotionConfig, TsneConfig};
use crate::fusion::SegmentTrainConfig;
use crate::model::{ModelConfig, ModelKind, MultitaskWeights, TcnConfig};
use crate::tensor::OptimizerKind;

use super::experiment::RowKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub clip_norm: Option<f64>,
    pub batch_size: usize,
    pub steps: usize,
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Sgd,
            learning_rate: 1e-3,
            clip_norm: Some(5.0),
            batch_size: 8,
            steps: 20_000,
            log_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.log_every == 0 {
            return Err(invalid("learning_rate, batch_size and log_every must be positive"));
        }
        if matches!(self.clip_norm, Some(c) if !(c > 0.0)) {
            return Err(invalid("clip_norm must be positive"));
        }
        Ok(())
    }
}

/// Filesystem locations; not part of the config hash.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub corpus: GenerateConfig,
    /// Held-out emotion corpus; never seen by encoder training.
    pub emotion_corpus: GenerateConfig,
    /// Standardise each mel bin with training-split statistics.
    pub normalize_features: bool,
    pub model: ModelConfig,
    pub weights: MultitaskWeights,
    pub train: TrainConfig,
    pub segments: SegmentTrainConfig,
    pub asr: AsrConfig,
    pub emotion: EmotionConfig,
    pub tsne: TsneConfig,
    pub n_folds: usize,
    pub test_fold: usize,
    pub length_buckets: usize,
    pub rows: Vec<RowKind>,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            corpus: GenerateConfig::default(),
            emotion_corpus: GenerateConfig {
                num_sentences: 2 * 7 * 24,
                fixed_transcripts: Some(2),
                balanced: true,
                id_prefix: "emo".to_string(),
                min_words: 3,
                max_words: 6,
                ..GenerateConfig::default()
            },
            normalize_features: false,
            model: ModelConfig::new(ModelKind::Tcn),
            weights: MultitaskWeights {
                lambda_acoustic: 1.0,
                lambda_linguistic: 1.0,
            },
            train: TrainConfig::default(),
            segments: SegmentTrainConfig::default(),
            asr: AsrConfig::default(),
            emotion: EmotionConfig::default(),
            tsne: TsneConfig::default(),
            n_folds: 4,
            test_fold: 0,
            length_buckets: 5,
            rows: RowKind::ALL.to_vec(),
            paths: Paths::default(),
        }
    }
}

impl RunConfig {
    /// Reduced sizes that run the whole comparison on one CPU core in
    /// minutes rather than hours.
    pub fn desk() -> Self {
        let mut c = Self::default();
        c.corpus.num_sentences = 2000;
        c.corpus.vocab_size = 20;
        c.corpus.min_words = 1;
        c.corpus.max_words = 4;
        c.emotion_corpus.num_sentences = 2 * 2 * 7 * 24;
        c.emotion_corpus.min_words = 2;
        c.emotion_corpus.max_words = 4;
        c.normalize_features = true;
        c.model.tcn = TcnConfig {
            kernel_size: 3,
            channels: 32,
            embedding_dim: 128,
            dilations: vec![1, 2, 4, 8, 16, 32],
            ..TcnConfig::default()
        };
        c.model.rnn.hidden = 96;
        c.model.dan.hidden = 64;
        c.model.decoder.acoustic_hidden = 64;
        c.model.decoder.linguistic_hidden = 96;
        c.train.optimizer = OptimizerKind::Adam;
        c.train.steps = 800;
        c.train.learning_rate = 2e-3;
        c.segments.steps = 150;
        c.asr.steps = 1500;
        c.asr.hidden = 96;
        c
    }

    /// Training-split statistics, or the identity when normalisation is off.
    pub fn feature_stats<'a>(&self, train: impl IntoIterator<Item = &'a MelSpectrogram>) -> Result<FeatureStats> {
        if self.normalize_features {
            FeatureStats::estimate(train)
        } else {
            Ok(FeatureStats::identity())
        }
    }

    /// Copies the top-level seed into every component.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.corpus.seed = c.seed;
        c.emotion_corpus.seed = c.seed;
        c.segments.seed = c.seed;
        c.asr.seed = c.seed;
        c.emotion.seed = c.seed;
        c.emotion.n_folds = c.n_folds;
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.corpus.validate()?;
        self.emotion_corpus.validate()?;
        self.model.tcn.validate()?;
        self.model.decoder.validate()?;
        self.weights.validate()?;
        self.train.validate()?;
        if self.n_folds < 2 || self.test_fold >= self.n_folds {
            return Err(invalid(format!(
                "need n_folds >= 2 and test_fold < n_folds, got {} / {}",
                self.test_fold, self.n_folds
            )));
        }
        if self.length_buckets == 0 {
            return Err(invalid("length_buckets must be >= 1"));
        }
        if self.corpus.id_prefix == self.emotion_corpus.id_prefix {
            return Err(invalid("the two corpora need distinct id prefixes"));
        }
        Ok(())
    }

    /// SHA-256 of the resolved config without paths.
    pub fn hash(&self) -> String {
        let mut c = self.resolved();
        c.paths = Paths::default();
        let bytes = serde_json::to_vec(&c).expect("config serialises");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
