//! Acoustic segment vectors trained skip-gram style: a segment should score
//! the mean of its neighbouring segments above the other contexts in the
//! batch.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Level, SegmentEmbeddingTable};
use crate::checkpoint::Container;
use crate::corpus::Alignment;
use crate::dsp::{MelSpectrogram, N_MELS};
use crate::error::{invalid, Error, Result};
use crate::params::{Bound, ParamId, ParamStore};
use crate::rng::stream;
use crate::tensor::{Adam, Optimizer, Tape, Tensor, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentTrainConfig {
    pub dim: usize,
    pub kernel_size: usize,
    /// Context radius in segments.
    pub window: usize,
    pub batch_size: usize,
    pub steps: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SegmentTrainConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            kernel_size: 3,
            window: 2,
            batch_size: 32,
            steps: 400,
            learning_rate: 3e-3,
            seed: 0,
        }
    }
}

/// One utterance as seen by segment training.
#[derive(Clone, Copy, Debug)]
pub struct SegmentSource<'a> {
    pub id: &'a str,
    pub mel: &'a MelSpectrogram,
    pub alignment: Option<&'a Alignment>,
}

impl<'a> SegmentSource<'a> {
    fn aligned(&self) -> Result<&'a Alignment> {
        let a = self
            .alignment
            .ok_or_else(|| invalid(format!("{} has no alignment", self.id)))?;
        a.validate(self.mel.num_frames())?;
        Ok(a)
    }
}

pub const KIND_SEGMENT_ENCODER: &str = "segment-encoder";

#[derive(Clone, Debug)]
pub struct SegmentEncoder {
    pub level: Level,
    pub config: SegmentTrainConfig,
    pub store: ParamStore,
    conv_w: ParamId,
    conv_b: ParamId,
    bilinear: ParamId,
    dim: usize,
}

impl SegmentEncoder {
    pub fn new(level: Level, config: &SegmentTrainConfig) -> Result<Self> {
        if config.dim == 0 || config.kernel_size == 0 {
            return Err(invalid("segment dim and kernel size must be >= 1"));
        }
        let mut rng = stream(config.seed, &format!("segment-init/{}", level.name()));
        let mut store = ParamStore::new();
        let (d, k) = (config.dim, config.kernel_size);
        let conv_w = store.add_glorot("segment.conv.weight", &[d, N_MELS, k], N_MELS * k, d, &mut rng);
        let conv_b = store.add_zeros("segment.conv.bias", &[d]);
        let bilinear = store.add_glorot("segment.context", &[d, d], d, d, &mut rng);
        Ok(Self {
            level,
            config: config.clone(),
            store,
            conv_w,
            conv_b,
            bilinear,
            dim: d,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn save(&self, path: impl AsRef<Path>, metadata: Value) -> Result<()> {
        let config = serde_json::json!({ "level": self.level, "train": self.config });
        let mut c = Container::new(KIND_SEGMENT_ENCODER, config, None, metadata);
        c.push_store(&self.store);
        c.write(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, Value)> {
        let c = Container::read(path)?;
        if c.header.kind != KIND_SEGMENT_ENCODER {
            return Err(Error::Format(format!("expected a segment encoder, found {}", c.header.kind)));
        }
        let level: Level = serde_json::from_value(c.header.config["level"].clone())?;
        let config: SegmentTrainConfig = serde_json::from_value(c.header.config["train"].clone())?;
        let mut enc = Self::new(level, &config)?;
        enc.store.load_blocks(c.blocks())?;
        Ok((enc, c.header.metadata.clone()))
    }

    fn encode_var(&self, tape: &mut Tape, bound: &Bound, mel: &MelSpectrogram, start: usize, end: usize) -> Result<Var> {
        let seg = mel.slice(start, end)?;
        let x = tape.constant(Tensor::matrix(N_MELS, seg.num_frames(), seg.channels_first())?);
        let h = tape.conv1d_causal(x, bound[self.conv_w], 1)?;
        let h = tape.add_col(h, bound[self.conv_b])?;
        let h = tape.relu(h);
        tape.mean_pool_time(h, 0)
    }

    /// Vectors for every aligned segment of one utterance.
    pub fn encode_source(&self, source: &SegmentSource<'_>) -> Result<Vec<Vec<f64>>> {
        let alignment = source.aligned()?;
        let mut tape = Tape::new();
        let bound = self.store.bind_frozen(&mut tape);
        alignment
            .units
            .iter()
            .map(|u| {
                let v = self.encode_var(&mut tape, &bound, source.mel, u.start, u.end)?;
                Ok(tape.value(v).data().to_vec())
            })
            .collect()
    }

    pub fn tabulate(&self, sources: &[SegmentSource<'_>]) -> Result<SegmentEmbeddingTable> {
        let mut table = SegmentEmbeddingTable::new(self.level, self.dim);
        for s in sources {
            for (i, v) in self.encode_source(s)?.into_iter().enumerate() {
                table.insert(s.id, i, v)?;
            }
        }
        Ok(table)
    }
}

#[derive(Clone, Debug)]
pub struct SegmentTraining {
    pub encoder: SegmentEncoder,
    /// In-batch contrastive loss per step.
    pub losses: Vec<f64>,
}

/// `(source, centre, neighbours)` for every segment with at least one
/// neighbour within the window. Single-segment utterances contribute nothing.
fn context_items(sources: &[SegmentSource<'_>], window: usize) -> Result<Vec<(usize, usize, Vec<usize>)>> {
    let mut items = Vec::new();
    for (s, src) in sources.iter().enumerate() {
        let n = src.aligned()?.len();
        for i in 0..n {
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(n - 1);
            let ctx: Vec<usize> = (lo..=hi).filter(|j| *j != i).collect();
            if !ctx.is_empty() {
                items.push((s, i, ctx));
            }
        }
    }
    Ok(items)
}

pub fn train_segment_embeddings(
    sources: &[SegmentSource<'_>],
    level: Level,
    config: &SegmentTrainConfig,
) -> Result<SegmentTraining> {
    if config.batch_size < 2 || config.window == 0 {
        return Err(invalid("segment training needs batch_size >= 2 and window >= 1"));
    }
    let items = context_items(sources, config.window)?;
    if items.is_empty() {
        return Err(invalid("no utterance has two or more segments"));
    }
    let mut encoder = SegmentEncoder::new(level, config)?;
    let mut opt = Adam::new(config.learning_rate, Some(5.0));
    let mut rng = stream(config.seed, &format!("segment-batches/{}", level.name()));
    let mut losses = Vec::with_capacity(config.steps);
    for _ in 0..config.steps {
        let batch: Vec<&(usize, usize, Vec<usize>)> = (0..config.batch_size)
            .map(|_| &items[rng.gen_range(0..items.len())])
            .collect();
        let mut tape = Tape::new();
        let bound = encoder.store.bind(&mut tape);
        let mut centres = Vec::with_capacity(batch.len());
        let mut contexts = Vec::with_capacity(batch.len());
        for (s, i, ctx) in &batch {
            let src = &sources[*s];
            let units = &src.aligned()?.units;
            centres.push(encoder.encode_var(&mut tape, &bound, src.mel, units[*i].start, units[*i].end)?);
            let neighbours = ctx
                .iter()
                .map(|j| encoder.encode_var(&mut tape, &bound, src.mel, units[*j].start, units[*j].end))
                .collect::<Result<Vec<_>>>()?;
            let stacked = tape.concat_rows(&neighbours)?;
            let by_col = tape.transpose(stacked);
            contexts.push(tape.mean_pool_time(by_col, 0)?);
        }
        let e = tape.concat_rows(&centres)?;
        let c = tape.concat_rows(&contexts)?;
        let ew = tape.matmul(e, bound[encoder.bilinear])?;
        let ct = tape.transpose(c);
        let logits = tape.matmul(ew, ct)?;
        let targets: Vec<usize> = (0..batch.len()).collect();
        let loss = tape.cross_entropy(logits, &targets, None)?;
        tape.backward(loss)?;
        losses.push(tape.value(loss).item());
        encoder.store.zero_grads();
        encoder.store.accumulate(&tape, &bound, 1.0);
        opt.step(encoder.store.tensors_mut())?;
    }
    Ok(SegmentTraining { encoder, losses })
}
