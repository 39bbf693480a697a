//! Sentence encoders, task decoders and the multitask objective.
//!
//! A [`SentenceModel`] owns one shared encoder (TCN, LSTM or DAN) and two
//! decoders. Both decoders read the same embedding, so the encoder
//! parameters sit on both loss paths.

pub mod config;
pub mod decoders;
pub mod rnn;
pub mod tcn;
pub mod vocab;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use config::{DanConfig, DecoderConfig, MultitaskWeights, Pooling, RnnConfig, TcnConfig};
pub use decoders::{position_code, AcousticDecoder, LinguisticDecoder};
pub use rnn::{LstmCell, RnnEncoder};
pub use tcn::TcnEncoder;
pub use vocab::Vocab;

use crate::dsp::{MelSpectrogram, N_MELS};
use crate::error::{invalid, Result};
use crate::fusion::dan::DanEncoder;
use crate::fusion::Level;
use crate::params::{Bound, ParamStore};
use crate::rng::stream;
use crate::tensor::{Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Tcn,
    Rnn,
    DanWord,
    DanPhoneme,
}

impl ModelKind {
    pub fn uses_segments(self) -> bool {
        self.level().is_some()
    }

    /// Segment level a DAN model reads; `None` for frame-level encoders.
    pub fn level(self) -> Option<Level> {
        match self {
            ModelKind::DanWord => Some(Level::Word),
            ModelKind::DanPhoneme => Some(Level::Phoneme),
            ModelKind::Tcn | ModelKind::Rnn => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Tcn => "tcn",
            ModelKind::Rnn => "rnn",
            ModelKind::DanWord => "dan-word",
            ModelKind::DanPhoneme => "dan-phoneme",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tcn" => Ok(Self::Tcn),
            "rnn" => Ok(Self::Rnn),
            "dan-word" => Ok(Self::DanWord),
            "dan-phoneme" => Ok(Self::DanPhoneme),
            other => Err(invalid(format!("unknown model kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Also supplies `embedding_dim` for every encoder kind.
    pub tcn: TcnConfig,
    pub rnn: RnnConfig,
    pub dan: DanConfig,
    pub decoder: DecoderConfig,
    /// Width of the segment vectors a DAN consumes.
    pub segment_dim: usize,
}

impl ModelConfig {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            tcn: TcnConfig::default(),
            rnn: RnnConfig::default(),
            dan: DanConfig::default(),
            decoder: DecoderConfig::default(),
            segment_dim: 32,
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.tcn.embedding_dim
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentenceEmbedding {
    pub vector: Vec<f64>,
    pub source_id: String,
}

#[derive(Clone, Debug)]
pub enum Encoder {
    Tcn(TcnEncoder),
    Rnn(RnnEncoder),
    Dan(DanEncoder),
}

/// What an encoder reads: the utterance's log-mel frames, or (for DAN) its
/// per-segment vectors.
#[derive(Clone, Copy, Debug)]
pub enum EncoderInput<'a> {
    Mel(&'a MelSpectrogram),
    Segments(&'a [Vec<f64>]),
}

/// One supervised utterance: encoder input plus both reconstruction targets.
#[derive(Clone, Copy, Debug)]
pub struct Example<'a> {
    pub input: EncoderInput<'a>,
    pub mel: &'a MelSpectrogram,
    pub target: &'a [usize],
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossValues {
    pub acoustic: f64,
    pub linguistic: f64,
    pub total: f64,
}

/// `λ_a·L_a + λ_l·L_l` on the tape. A path whose weight is zero may be
/// passed as `None` and contributes nothing.
pub fn multitask_loss(
    tape: &mut Tape,
    acoustic: Option<Var>,
    linguistic: Option<Var>,
    w: &MultitaskWeights,
) -> Result<Var> {
    w.validate()?;
    let mut terms = Vec::new();
    if let Some(a) = acoustic {
        if w.lambda_acoustic > 0.0 {
            terms.push(tape.scale(a, w.lambda_acoustic));
        }
    }
    if let Some(l) = linguistic {
        if w.lambda_linguistic > 0.0 {
            terms.push(tape.scale(l, w.lambda_linguistic));
        }
    }
    let mut total = *terms
        .first()
        .ok_or_else(|| invalid("no loss term with positive weight"))?;
    for t in &terms[1..] {
        total = tape.add(total, *t)?;
    }
    Ok(total)
}

/// Scalar form of [`multitask_loss`].
pub fn combine_losses(acoustic: f64, linguistic: f64, w: &MultitaskWeights) -> Result<f64> {
    w.validate()?;
    if !(acoustic.is_finite() && linguistic.is_finite() && acoustic >= 0.0 && linguistic >= 0.0) {
        return Err(invalid("losses must be finite and nonnegative"));
    }
    Ok(w.lambda_acoustic * acoustic + w.lambda_linguistic * linguistic)
}

#[derive(Clone, Debug)]
pub struct SentenceModel {
    config: ModelConfig,
    vocab: Vocab,
    pub store: ParamStore,
    encoder: Encoder,
    acoustic: AcousticDecoder,
    linguistic: LinguisticDecoder,
}

fn mel_input(tape: &mut Tape, mel: &MelSpectrogram) -> Result<Var> {
    if mel.num_frames() == 0 {
        return Err(invalid("empty spectrogram"));
    }
    Ok(tape.constant(Tensor::matrix(N_MELS, mel.num_frames(), mel.channels_first())?))
}

fn mel_target(tape: &mut Tape, mel: &MelSpectrogram) -> Result<Var> {
    Ok(tape.constant(Tensor::matrix(mel.num_frames(), N_MELS, mel.data().to_vec())?))
}

impl SentenceModel {
    pub fn new(config: ModelConfig, vocab: Vocab, seed: u64) -> Result<Self> {
        config.tcn.validate()?;
        config.decoder.validate()?;
        let mut rng = stream(seed, "model-init");
        let mut store = ParamStore::new();
        let e = config.embedding_dim();
        let encoder = match config.kind {
            ModelKind::Tcn => Encoder::Tcn(TcnEncoder::for_mels(&config.tcn, &mut store, &mut rng)?),
            ModelKind::Rnn => Encoder::Rnn(RnnEncoder::new(&config.rnn, N_MELS, e, &mut store, &mut rng)?),
            ModelKind::DanWord | ModelKind::DanPhoneme => {
                if config.segment_dim == 0 || config.dan.hidden == 0 {
                    return Err(invalid("DAN widths must be >= 1"));
                }
                Encoder::Dan(DanEncoder::new(config.segment_dim, config.dan.hidden, e, &mut store, &mut rng))
            }
        };
        let acoustic = AcousticDecoder::new(e, &config.decoder, &mut store, &mut rng);
        let linguistic = LinguisticDecoder::new("linguistic", e, vocab.len(), &config.decoder, &mut store, &mut rng);
        Ok(Self {
            config,
            vocab,
            store,
            encoder,
            acoustic,
            linguistic,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn acoustic_decoder(&self) -> &AcousticDecoder {
        &self.acoustic
    }

    pub fn linguistic_decoder(&self) -> &LinguisticDecoder {
        &self.linguistic
    }

    /// Names of the parameters that belong to the shared encoder.
    pub fn encoder_param_names(&self) -> Vec<String> {
        self.store
            .names()
            .iter()
            .filter(|n| n.starts_with("tcn.") || n.starts_with("rnn.") || n.starts_with("dan."))
            .cloned()
            .collect()
    }

    /// Embedding `[1 × E]` on `tape`; `train` enables dropout.
    pub fn embed_var(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        input: EncoderInput<'_>,
        train: Option<&mut ChaCha8Rng>,
    ) -> Result<Var> {
        match (&self.encoder, input) {
            (Encoder::Tcn(enc), EncoderInput::Mel(mel)) => {
                let x = mel_input(tape, mel)?;
                enc.forward(tape, bound, x, train)
            }
            (Encoder::Rnn(enc), EncoderInput::Mel(mel)) => {
                if mel.num_frames() == 0 {
                    return Err(invalid("empty spectrogram"));
                }
                let x = mel_target(tape, mel)?;
                enc.forward(tape, bound, x)
            }
            (Encoder::Dan(enc), EncoderInput::Segments(segs)) => enc.forward(tape, bound, segs),
            (_, _) => Err(invalid(format!(
                "{} encoder cannot read this input kind",
                self.config.kind.name()
            ))),
        }
    }

    /// Frozen, evaluation-mode embedding.
    pub fn embed(&self, input: EncoderInput<'_>) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let bound = self.store.bind_frozen(&mut tape);
        let e = self.embed_var(&mut tape, &bound, input, None)?;
        Ok(tape.value(e).data().to_vec())
    }

    pub fn encode(&self, mel: &MelSpectrogram, source_id: impl Into<String>) -> Result<SentenceEmbedding> {
        Ok(SentenceEmbedding {
            vector: self.embed(EncoderInput::Mel(mel))?,
            source_id: source_id.into(),
        })
    }

    /// Builds the weighted loss for one utterance on `tape`.
    pub fn loss(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        example: &Example<'_>,
        weights: &MultitaskWeights,
        train: Option<&mut ChaCha8Rng>,
    ) -> Result<(Var, LossValues)> {
        let emb = self.embed_var(tape, bound, example.input, train)?;
        let acoustic = if weights.lambda_acoustic > 0.0 {
            let pred = self.acoustic.forward(tape, bound, emb, example.mel.num_frames())?;
            let target = mel_target(tape, example.mel)?;
            Some(tape.mse_loss(pred, target)?)
        } else {
            None
        };
        let linguistic = if weights.lambda_linguistic > 0.0 {
            Some(self.linguistic.loss(tape, bound, emb, example.target)?)
        } else {
            None
        };
        let total = multitask_loss(tape, acoustic, linguistic, weights)?;
        let values = LossValues {
            acoustic: acoustic.map_or(0.0, |v| tape.value(v).item()),
            linguistic: linguistic.map_or(0.0, |v| tape.value(v).item()),
            total: tape.value(total).item(),
        };
        Ok((total, values))
    }

    /// Forward + backward for one utterance, accumulating `scale ·` grads
    /// into the parameter store.
    pub fn accumulate_gradients(
        &mut self,
        example: &Example<'_>,
        weights: &MultitaskWeights,
        train: Option<&mut ChaCha8Rng>,
        scale: f64,
    ) -> Result<LossValues> {
        let mut tape = Tape::new();
        let bound = self.store.bind(&mut tape);
        let (loss, values) = self.loss(&mut tape, &bound, example, weights, train)?;
        tape.backward(loss)?;
        self.store.accumulate(&tape, &bound, scale);
        Ok(values)
    }

    /// One tape for the whole batch: the mean loss is backpropagated and its
    /// gradient added to the store. Returns the mean loss values.
    pub fn accumulate_batch(
        &mut self,
        examples: &[Example<'_>],
        weights: &MultitaskWeights,
        mut train: Option<&mut ChaCha8Rng>,
    ) -> Result<LossValues> {
        if examples.is_empty() {
            return Err(invalid("empty batch"));
        }
        let mut tape = Tape::new();
        let bound = self.store.bind(&mut tape);
        let mut total = None;
        let mut mean = LossValues::default();
        let b = examples.len() as f64;
        for ex in examples {
            let (loss, v) = self.loss(&mut tape, &bound, ex, weights, train.as_deref_mut())?;
            mean.acoustic += v.acoustic / b;
            mean.linguistic += v.linguistic / b;
            mean.total += v.total / b;
            total = Some(match total {
                None => loss,
                Some(t) => tape.add(t, loss)?,
            });
        }
        let loss = tape.scale(total.expect("nonempty"), 1.0 / b);
        tape.backward(loss)?;
        self.store.accumulate(&tape, &bound, 1.0);
        Ok(mean)
    }

    pub fn evaluate_loss(&self, example: &Example<'_>, weights: &MultitaskWeights) -> Result<LossValues> {
        let mut tape = Tape::new();
        let bound = self.store.bind_frozen(&mut tape);
        Ok(self.loss(&mut tape, &bound, example, weights, None)?.1)
    }

    /// Acoustic reconstruction `[num_frames × 80]` from an embedding.
    pub fn decode_acoustic(&self, embedding: &[f64], num_frames: usize) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bound = self.store.bind_frozen(&mut tape);
        let e = tape.constant(Tensor::row(embedding.to_vec()));
        let out = self.acoustic.forward(&mut tape, &bound, e, num_frames)?;
        Ok(tape.value(out).clone())
    }

    /// Greedy transcript ids (no `<eos>`) from an embedding.
    pub fn decode_linguistic(&self, embedding: &[f64], max_len: usize) -> Result<Vec<usize>> {
        let mut tape = Tape::new();
        let bound = self.store.bind_frozen(&mut tape);
        let e = tape.constant(Tensor::row(embedding.to_vec()));
        self.linguistic.greedy(&mut tape, &bound, e, max_len)
    }
}
