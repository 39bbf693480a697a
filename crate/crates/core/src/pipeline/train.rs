use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::data::Dataset;
use crate::error::{invalid, Result};
use crate::model::{EncoderInput, Example, ModelConfig, MultitaskWeights, SentenceModel, Vocab};
use crate::rng::{derive_seed, stream};
use crate::tensor::optim;

/// Window-averaged losses at `step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLine {
    pub step: usize,
    #[serde(rename = "L_a")]
    pub l_a: f64,
    #[serde(rename = "L_l")]
    pub l_l: f64,
    #[serde(rename = "L_Total")]
    pub l_total: f64,
}

pub fn examples<'a>(data: &'a Dataset, segments: Option<&'a [Vec<Vec<f64>>]>) -> Vec<Example<'a>> {
    (0..data.len())
        .map(|i| Example {
            input: match segments {
                Some(s) => EncoderInput::Segments(&s[i]),
                None => EncoderInput::Mel(&data.mels[i]),
            },
            mel: &data.mels[i],
            target: &data.targets[i],
        })
        .collect()
}

/// Minibatch training over `examples`, calling `on_log` every
/// `log_every` steps and at the last step.
pub fn train_on_examples(
    model: &mut SentenceModel,
    examples: &[Example<'_>],
    weights: &MultitaskWeights,
    config: &TrainConfig,
    seed: u64,
    mut on_log: impl FnMut(&LogLine),
) -> Result<Vec<LogLine>> {
    config.validate()?;
    weights.validate()?;
    if examples.is_empty() {
        return Err(invalid("no training examples"));
    }
    let label = model.config().kind.name();
    let mut opt = optim::build(config.optimizer, config.learning_rate, config.clip_norm);
    let mut order_rng = stream(seed, &format!("batches/{label}"));
    let mut dropout_rng = stream(seed, &format!("dropout/{label}"));
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut cursor = order.len();
    let mut log = Vec::new();
    let (mut sa, mut sl, mut st, mut count) = (0.0, 0.0, 0.0, 0usize);
    let b = config.batch_size.min(examples.len());
    for step in 1..=config.steps {
        let mut batch = Vec::with_capacity(b);
        for _ in 0..b {
            if cursor == order.len() {
                order.shuffle(&mut order_rng);
                cursor = 0;
            }
            batch.push(examples[order[cursor]]);
            cursor += 1;
        }
        model.store.zero_grads();
        let v = model.accumulate_batch(&batch, weights, Some(&mut dropout_rng))?;
        if !v.total.is_finite() {
            return Err(invalid(format!("loss became non-finite at step {step}")));
        }
        opt.step(model.store.tensors_mut())?;
        sa += v.acoustic;
        sl += v.linguistic;
        st += v.total;
        count += 1;
        if step % config.log_every == 0 || step == config.steps {
            let n = count as f64;
            let line = LogLine {
                step,
                l_a: sa / n,
                l_l: sl / n,
                l_total: st / n,
            };
            on_log(&line);
            log.push(line);
            (sa, sl, st, count) = (0.0, 0.0, 0.0, 0);
        }
    }
    Ok(log)
}

pub fn train_model(
    model_config: &ModelConfig,
    vocab: &Vocab,
    data: &Dataset,
    segments: Option<&[Vec<Vec<f64>>]>,
    weights: &MultitaskWeights,
    config: &TrainConfig,
    seed: u64,
    on_log: impl FnMut(&LogLine),
) -> Result<(SentenceModel, Vec<LogLine>)> {
    if model_config.kind.uses_segments() != segments.is_some() {
        return Err(invalid(format!(
            "{} model {} segment vectors",
            model_config.kind.name(),
            if segments.is_some() { "does not take" } else { "needs" }
        )));
    }
    let label = model_config.kind.name();
    let mut model = SentenceModel::new(model_config.clone(), vocab.clone(), derive_seed(seed, &format!("model/{label}")))?;
    let ex = examples(data, segments);
    let log = train_on_examples(&mut model, &ex, weights, config, seed, on_log)?;
    Ok((model, log))
}

/// Frozen embeddings, in dataset order.
pub fn embed_dataset(
    model: &SentenceModel,
    data: &Dataset,
    segments: Option<&[Vec<Vec<f64>>]>,
) -> Result<Vec<Vec<f64>>> {
    let ex = examples(data, segments);
    let out: Vec<Vec<f64>> = ex.par_iter().map(|e| model.embed(e.input)).collect::<Result<_>>()?;
    if let Some(i) = out.iter().position(|v| v.iter().any(|x| !x.is_finite())) {
        return Err(invalid(format!("non-finite embedding for {}", data.records[i].id)));
    }
    Ok(out)
}
