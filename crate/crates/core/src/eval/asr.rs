use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::edit::{edit_distance, EditCounts};
use super::report::{EvalReport, Task};
use super::stats::{bootstrap_ci95_halfwidth, column_moments, standardize};
use crate::error::{invalid, Result};
use crate::model::{DecoderConfig, LinguisticDecoder, Vocab};
use crate::params::ParamStore;
use crate::rng::stream;
use crate::tensor::{Adam, Optimizer, Tape, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AsrConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden: usize,
    pub symbol_dim: usize,
    pub max_len: usize,
    pub bootstrap_resamples: usize,
    pub seed: u64,
}

impl Default for AsrConfig {
    fn default() -> Self {
        Self {
            steps: 1500,
            batch_size: 16,
            learning_rate: 3e-3,
            hidden: 128,
            symbol_dim: 16,
            max_len: 128,
            bootstrap_resamples: 1000,
            seed: 0,
        }
    }
}

/// A frozen embedding and its target ids (phonemes and boundaries, no `<eos>`).
#[derive(Clone, Debug, PartialEq)]
pub struct AsrSample {
    pub id: String,
    pub embedding: Vec<f64>,
    pub target: Vec<usize>,
    pub num_frames: usize,
}

#[derive(Clone, Debug)]
pub struct AsrDecoder {
    pub store: ParamStore,
    decoder: LinguisticDecoder,
    mean: Vec<f64>,
    std: Vec<f64>,
    max_len: usize,
    pub losses: Vec<f64>,
}

/// Scores for one test utterance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtteranceScore {
    pub id: String,
    pub num_frames: usize,
    pub phoneme_ref_len: usize,
    pub phoneme_edits: EditCounts,
    pub word_ref_len: usize,
    pub word_edits: EditCounts,
    pub hypothesis: Vec<usize>,
}

impl AsrDecoder {
    /// Fits a fresh recurrent decoder on standardised embeddings.
    /// `steps = 0` leaves it at its random initialisation.
    pub fn train(train: &[AsrSample], vocab_size: usize, config: &AsrConfig) -> Result<Self> {
        if train.is_empty() {
            return Err(invalid("no training embeddings"));
        }
        if config.batch_size == 0 {
            return Err(invalid("batch_size must be >= 1"));
        }
        let rows: Vec<Vec<f64>> = train.iter().map(|s| s.embedding.clone()).collect();
        let (mean, std) = column_moments(&rows)?;
        let inputs = standardize(&rows, &mean, &std);
        let dim = mean.len();
        let dc = DecoderConfig {
            linguistic_hidden: config.hidden,
            symbol_dim: config.symbol_dim,
            ..DecoderConfig::default()
        };
        let mut rng = stream(config.seed, "asr-decoder-init");
        let mut store = ParamStore::new();
        let decoder = LinguisticDecoder::new("asr", dim, vocab_size, &dc, &mut store, &mut rng);
        let mut opt = Adam::new(config.learning_rate, Some(5.0));
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut cursor = order.len();
        let mut batch_rng = stream(config.seed, "asr-batches");
        let mut losses = Vec::with_capacity(config.steps);
        // decoding stops at twice the longest training transcript
        let longest = train.iter().map(|s| s.target.len()).max().unwrap_or(0);
        for _ in 0..config.steps {
            let mut tape = Tape::new();
            let bound = store.bind(&mut tape);
            let b = config.batch_size.min(train.len());
            let mut rows = Vec::with_capacity(b * dim);
            let mut targets = Vec::with_capacity(b);
            for _ in 0..b {
                if cursor == order.len() {
                    order.shuffle(&mut batch_rng);
                    cursor = 0;
                }
                let i = order[cursor];
                cursor += 1;
                rows.extend_from_slice(&inputs[i]);
                targets.push(train[i].target.clone());
            }
            let e = tape.constant(Tensor::matrix(b, dim, rows)?);
            let loss = decoder.loss_batch(&mut tape, &bound, e, &targets)?;
            tape.backward(loss)?;
            losses.push(tape.value(loss).item());
            store.zero_grads();
            store.accumulate(&tape, &bound, 1.0);
            opt.step(store.tensors_mut())?;
        }
        Ok(Self {
            store,
            decoder,
            mean,
            std,
            max_len: config.max_len.min(2 * longest + 2),
            losses,
        })
    }

    pub fn transcribe(&self, embedding: &[f64]) -> Result<Vec<usize>> {
        if embedding.len() != self.mean.len() {
            return Err(invalid(format!(
                "embedding has {} values, decoder expects {}",
                embedding.len(),
                self.mean.len()
            )));
        }
        let x = standardize(&[embedding.to_vec()], &self.mean, &self.std).remove(0);
        let mut tape = Tape::new();
        let bound = self.store.bind_frozen(&mut tape);
        let e = tape.constant(Tensor::row(x));
        self.decoder.greedy(&mut tape, &bound, e, self.max_len)
    }

    pub fn score(&self, sample: &AsrSample) -> Result<UtteranceScore> {
        let hyp = self.transcribe(&sample.embedding)?;
        let (rp, hp) = (Vocab::phonemes_of(&sample.target), Vocab::phonemes_of(&hyp));
        let (rw, hw) = (Vocab::words_of(&sample.target), Vocab::words_of(&hyp));
        if rp.is_empty() {
            return Err(invalid(format!("{} has an empty reference", sample.id)));
        }
        Ok(UtteranceScore {
            id: sample.id.clone(),
            num_frames: sample.num_frames,
            phoneme_ref_len: rp.len(),
            phoneme_edits: edit_distance(&rp, &hp),
            word_ref_len: rw.len(),
            word_edits: edit_distance(&rw, &hw),
            hypothesis: hyp,
        })
    }
}

pub fn corpus_per(scores: &[UtteranceScore]) -> f64 {
    let d: usize = scores.iter().map(|s| s.phoneme_edits.distance).sum();
    let n: usize = scores.iter().map(|s| s.phoneme_ref_len).sum();
    d as f64 / n.max(1) as f64
}

pub fn corpus_wer(scores: &[UtteranceScore]) -> f64 {
    let d: usize = scores.iter().map(|s| s.word_edits.distance).sum();
    let n: usize = scores.iter().map(|s| s.word_ref_len).sum();
    d as f64 / n.max(1) as f64
}

#[derive(Clone, Debug)]
pub struct AsrOutcome {
    pub report: EvalReport,
    pub scores: Vec<UtteranceScore>,
    pub decoder: AsrDecoder,
}

/// Trains on `train`, scores `test`, and reports PER and WER with
/// bootstrap 95% intervals over test utterances.
pub fn eval_asr(train: &[AsrSample], test: &[AsrSample], vocab_size: usize, config: &AsrConfig) -> Result<AsrOutcome> {
    if test.is_empty() {
        return Err(invalid("no test embeddings"));
    }
    let decoder = AsrDecoder::train(train, vocab_size, config)?;
    let scores = test.iter().map(|s| decoder.score(s)).collect::<Result<Vec<_>>>()?;
    let mut rng = stream(config.seed, "asr-bootstrap");
    let per_ci = bootstrap_ci95_halfwidth(scores.len(), config.bootstrap_resamples, &mut rng, |idx| {
        let picked: Vec<UtteranceScore> = idx.iter().map(|i| scores[*i].clone()).collect();
        corpus_per(&picked)
    })?;
    let wer_ci = bootstrap_ci95_halfwidth(scores.len(), config.bootstrap_resamples, &mut rng, |idx| {
        let picked: Vec<UtteranceScore> = idx.iter().map(|i| scores[*i].clone()).collect();
        corpus_wer(&picked)
    })?;
    let mut report = EvalReport::new(Task::Asr);
    report.seed = config.seed;
    report.set("per", corpus_per(&scores), per_ci);
    report.set("wer", corpus_wer(&scores), wer_ci);
    report
        .notes
        .push("error rates are total edits over total reference length; intervals are percentile bootstrap over test utterances".into());
    Ok(AsrOutcome { report, scores, decoder })
}

/// Pairs embeddings with targets, checking counts.
pub fn pair_samples(
    ids: &[String],
    embeddings: &[Vec<f64>],
    targets: &[Vec<usize>],
    num_frames: &[usize],
) -> Result<Vec<AsrSample>> {
    if ids.len() != embeddings.len() || embeddings.len() != targets.len() || targets.len() != num_frames.len() {
        return Err(invalid(format!(
            "{} embeddings for {} transcripts",
            embeddings.len(),
            targets.len()
        )));
    }
    Ok(ids
        .iter()
        .zip(embeddings)
        .zip(targets)
        .zip(num_frames)
        .map(|(((id, e), t), n)| AsrSample {
            id: id.clone(),
            embedding: e.clone(),
            target: t.clone(),
            num_frames: *n,
        })
        .collect())
}
