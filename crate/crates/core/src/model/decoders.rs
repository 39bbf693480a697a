//! Task heads that read a sentence embedding back out.

use rand_chacha::ChaCha8Rng;

use super::config::DecoderConfig;
use super::rnn::LstmCell;
use super::vocab::Vocab;
use crate::dsp::N_MELS;
use crate::error::{invalid, Error, Result};
use crate::params::{Bound, ParamId, ParamStore};
use crate::tensor::{Tape, Tensor, Var};

/// Fixed sinusoidal position code, `[num_frames × dim]`.
///
/// The first half encodes relative position `τ = t/(T−1)` as
/// `sin(π·j·τ), cos(π·j·τ)`; the second half encodes absolute frame index
/// with geometrically spaced periods starting at 16 frames.
pub fn position_code(num_frames: usize, dim: usize) -> Tensor {
    let half = dim / 2;
    let pairs_rel = half / 2;
    let pairs_abs = (dim - half) / 2;
    let mut data = Vec::with_capacity(num_frames * dim);
    for t in 0..num_frames {
        let tau = if num_frames > 1 {
            t as f64 / (num_frames - 1) as f64
        } else {
            0.0
        };
        for j in 0..pairs_rel {
            let a = std::f64::consts::PI * (j + 1) as f64 * tau;
            data.push(a.sin());
            data.push(a.cos());
        }
        for j in 0..pairs_abs {
            let period = 16.0 * 3f64.powi(j as i32);
            let a = 2.0 * std::f64::consts::PI * t as f64 / period;
            data.push(a.sin());
            data.push(a.cos());
        }
    }
    Tensor::matrix(num_frames, dim, data).expect("sized above")
}

/// Non-autoregressive per-frame reconstructor: the embedding is broadcast
/// to every frame, joined with the position code and passed through a
/// two-layer network. The first layer is stored as two blocks (embedding
/// rows and position rows), which is the same map as one matrix over the
/// concatenated input.
#[derive(Clone, Debug)]
pub struct AcousticDecoder {
    w_embed: ParamId,
    w_pos: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
    position_dim: usize,
}

impl AcousticDecoder {
    pub fn new(embedding_dim: usize, config: &DecoderConfig, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> Self {
        let h = config.acoustic_hidden;
        let fan_in = embedding_dim + config.position_dim;
        Self {
            w_embed: store.add_glorot("acoustic.w1_embed", &[embedding_dim, h], fan_in, h, rng),
            w_pos: store.add_glorot("acoustic.w1_pos", &[config.position_dim, h], fan_in, h, rng),
            b1: store.add_zeros("acoustic.b1", &[1, h]),
            w2: store.add_glorot("acoustic.w2", &[h, N_MELS], h, N_MELS, rng),
            b2: store.add_zeros("acoustic.b2", &[1, N_MELS]),
            position_dim: config.position_dim,
        }
    }

    pub fn output_bias(&self) -> ParamId {
        self.b2
    }

    /// `[num_frames × 80]` prediction from `embedding[1×E]`.
    pub fn forward(&self, tape: &mut Tape, bound: &Bound, embedding: Var, num_frames: usize) -> Result<Var> {
        if num_frames == 0 {
            return Err(invalid("acoustic decoder needs num_frames >= 1"));
        }
        let e = tape.matmul(embedding, bound[self.w_embed])?;
        let e = tape.add_row(e, bound[self.b1])?;
        let e = tape.repeat_rows(e, num_frames)?;
        let pos = tape.constant(position_code(num_frames, self.position_dim));
        let p = tape.matmul(pos, bound[self.w_pos])?;
        let pre = tape.add(e, p)?;
        let hidden = tape.relu(pre);
        let out = tape.matmul(hidden, bound[self.w2])?;
        tape.add_row(out, bound[self.b2])
    }
}

/// Autoregressive LSTM decoder over the symbol vocabulary. The hidden state
/// starts from `tanh(W·e + b)`; each step reads the previous symbol and the
/// sentence embedding. `<eos>` doubles as the start symbol.
#[derive(Clone, Debug)]
pub struct LinguisticDecoder {
    symbols: ParamId,
    w_sym: ParamId,
    w_embed: ParamId,
    init_w: ParamId,
    init_b: ParamId,
    cell: LstmCell,
    out_w: ParamId,
    out_b: ParamId,
    vocab_size: usize,
}

impl LinguisticDecoder {
    pub fn new(
        prefix: &str,
        embedding_dim: usize,
        vocab_size: usize,
        config: &DecoderConfig,
        store: &mut ParamStore,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let h = config.linguistic_hidden;
        let s = config.symbol_dim;
        let symbols = store.add_glorot(format!("{prefix}.symbols"), &[vocab_size, s], vocab_size, s, rng);
        let w_sym = store.add_glorot(format!("{prefix}.w_sym"), &[s, 4 * h], s + embedding_dim, h, rng);
        let w_embed = store.add_glorot(format!("{prefix}.w_embed"), &[embedding_dim, 4 * h], s + embedding_dim, h, rng);
        let init_w = store.add_glorot(format!("{prefix}.init_w"), &[embedding_dim, h], embedding_dim, h, rng);
        let init_b = store.add_zeros(format!("{prefix}.init_b"), &[1, h]);
        // Gate inputs are assembled outside the cell from w_sym and w_embed;
        // the cell's w_x slot aliases w_sym.
        let cell = LstmCell {
            hidden: h,
            input_dim: s + embedding_dim,
            w_x: w_sym,
            w_h: store.add_glorot(format!("{prefix}.w_h"), &[h, 4 * h], h, h, rng),
            bias: {
                let mut b = Tensor::zeros(&[1, 4 * h]);
                b.data_mut()[h..2 * h].fill(1.0);
                store.add(format!("{prefix}.bias"), b)
            },
        };
        let out_w = store.add_glorot(format!("{prefix}.out_w"), &[h, vocab_size], h, vocab_size, rng);
        let out_b = store.add_zeros(format!("{prefix}.out_b"), &[1, vocab_size]);
        Self {
            symbols,
            w_sym,
            w_embed,
            init_w,
            init_b,
            cell,
            out_w,
            out_b,
            vocab_size,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn start(&self, tape: &mut Tape, bound: &Bound, embedding: Var) -> Result<(Var, Var, Var, Var)> {
        let h0 = tape.matmul(embedding, bound[self.init_w])?;
        let h0 = tape.add_row(h0, bound[self.init_b])?;
        let h0 = tape.tanh(h0);
        let rows = tape.value(embedding).rows();
        let c0 = tape.constant(Tensor::zeros(&[rows, self.cell.hidden]));
        // symbol contributions to the gates for every vocabulary entry
        let sym_gates = tape.matmul(bound[self.symbols], bound[self.w_sym])?;
        let emb_gates = tape.matmul(embedding, bound[self.w_embed])?;
        Ok((h0, c0, sym_gates, emb_gates))
    }

    fn check_ids(&self, ids: &[usize]) -> Result<()> {
        if let Some(bad) = ids.iter().find(|i| **i >= self.vocab_size || **i == Vocab::EOS_ID) {
            return Err(Error::InvalidArgument(format!(
                "target symbol id {bad} is not a transcript symbol"
            )));
        }
        Ok(())
    }

    /// Teacher-forced logits `[(L+1) × V]` for `target` followed by `<eos>`.
    pub fn forward_teacher(&self, tape: &mut Tape, bound: &Bound, embedding: Var, target: &[usize]) -> Result<Var> {
        self.check_ids(target)?;
        let (mut h, mut c, sym_gates, emb_gates) = self.start(tape, bound, embedding)?;
        let mut rows = Vec::with_capacity(target.len() + 1);
        let mut prev = Vocab::EOS_ID;
        for step in 0..=target.len() {
            let s = tape.select_row(sym_gates, prev)?;
            let xw = tape.add(s, emb_gates)?;
            (h, c) = self.cell.step(tape, bound, xw, h, c)?;
            let logits = tape.matmul(h, bound[self.out_w])?;
            rows.push(tape.add_row(logits, bound[self.out_b])?);
            if step < target.len() {
                prev = target[step];
            }
        }
        tape.concat_rows(&rows)
    }

    /// Mean cross-entropy over the non-PAD positions of `target + <eos>`.
    pub fn loss(&self, tape: &mut Tape, bound: &Bound, embedding: Var, target: &[usize]) -> Result<Var> {
        let logits = self.forward_teacher(tape, bound, embedding, target)?;
        let mut gold = target.to_vec();
        gold.push(Vocab::EOS_ID);
        tape.cross_entropy(logits, &gold, Some(Vocab::PAD_ID))
    }

    /// Teacher-forced loss for a batch, `embeddings[B×E]` with one target per
    /// row, averaged over every non-PAD position of the batch (so longer
    /// targets weigh more than in [`Self::loss`]).
    pub fn loss_batch(&self, tape: &mut Tape, bound: &Bound, embeddings: Var, targets: &[Vec<usize>]) -> Result<Var> {
        if targets.len() != tape.value(embeddings).rows() {
            return Err(invalid(format!(
                "{} targets for {} embeddings",
                targets.len(),
                tape.value(embeddings).rows()
            )));
        }
        for t in targets {
            self.check_ids(t)?;
        }
        let longest = targets.iter().map(Vec::len).max().unwrap_or(0);
        let (mut h, mut c, sym_gates, emb_gates) = self.start(tape, bound, embeddings)?;
        let mut rows = Vec::with_capacity(longest + 1);
        let mut gold = Vec::with_capacity((longest + 1) * targets.len());
        for step in 0..=longest {
            let prev: Vec<usize> = targets
                .iter()
                .map(|t| match step {
                    0 => Vocab::EOS_ID,
                    s if s <= t.len() => t[s - 1],
                    _ => Vocab::PAD_ID,
                })
                .collect();
            let s = tape.gather_rows(sym_gates, &prev)?;
            let xw = tape.add(s, emb_gates)?;
            (h, c) = self.cell.step(tape, bound, xw, h, c)?;
            let logits = tape.matmul(h, bound[self.out_w])?;
            rows.push(tape.add_row(logits, bound[self.out_b])?);
            gold.extend(targets.iter().map(|t| match step {
                s if s < t.len() => t[s],
                s if s == t.len() => Vocab::EOS_ID,
                _ => Vocab::PAD_ID,
            }));
        }
        let logits = tape.concat_rows(&rows)?;
        tape.cross_entropy(logits, &gold, Some(Vocab::PAD_ID))
    }

    /// Greedy argmax decoding until `<eos>` or `max_len` symbols.
    pub fn greedy(&self, tape: &mut Tape, bound: &Bound, embedding: Var, max_len: usize) -> Result<Vec<usize>> {
        let (mut h, mut c, sym_gates, emb_gates) = self.start(tape, bound, embedding)?;
        let mut out = Vec::new();
        let mut prev = Vocab::EOS_ID;
        while out.len() < max_len {
            let s = tape.select_row(sym_gates, prev)?;
            let xw = tape.add(s, emb_gates)?;
            (h, c) = self.cell.step(tape, bound, xw, h, c)?;
            let logits = tape.matmul(h, bound[self.out_w])?;
            let logits = tape.add_row(logits, bound[self.out_b])?;
            let row = tape.value(logits).data();
            let next = row
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != Vocab::PAD_ID)
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .expect("vocabulary is nonempty");
            if next == Vocab::EOS_ID {
                break;
            }
            out.push(next);
            prev = next;
        }
        Ok(out)
    }

    /// Per-step logits from running greedy decoding for `max_len` steps
    /// without stopping, `[max_len × V]`.
    pub fn logits_unrolled(&self, tape: &mut Tape, bound: &Bound, embedding: Var, max_len: usize) -> Result<Var> {
        if max_len == 0 {
            return Err(invalid("max_len must be >= 1"));
        }
        let (mut h, mut c, sym_gates, emb_gates) = self.start(tape, bound, embedding)?;
        let mut rows = Vec::with_capacity(max_len);
        let mut prev = Vocab::EOS_ID;
        for _ in 0..max_len {
            let s = tape.select_row(sym_gates, prev)?;
            let xw = tape.add(s, emb_gates)?;
            (h, c) = self.cell.step(tape, bound, xw, h, c)?;
            let logits = tape.matmul(h, bound[self.out_w])?;
            let logits = tape.add_row(logits, bound[self.out_b])?;
            let row = tape.value(logits).data();
            prev = (0..row.len())
                .filter(|i| *i != Vocab::PAD_ID)
                .max_by(|a, b| row[*a].total_cmp(&row[*b]))
                .expect("vocabulary is nonempty");
            rows.push(logits);
        }
        tape.concat_rows(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn position_code_shape_and_range() {
        let p = position_code(37, 16);
        assert_eq!(p.shape(), &[37, 16]);
        assert!(p.data().iter().all(|v| v.abs() <= 1.0));
        let single = position_code(1, 8);
        assert_eq!(single.shape(), &[1, 8]);
    }

    #[test]
    fn zero_model_predicts_zero_frames() {
        let mut store = ParamStore::new();
        let mut rng = stream(0, "dec");
        let dec = AcousticDecoder::new(4, &DecoderConfig::default(), &mut store, &mut rng);
        for t in store.tensors_mut() {
            t.data_mut().fill(0.0);
        }
        let mut tape = Tape::new();
        let bound = store.bind_frozen(&mut tape);
        let e = tape.constant(Tensor::zeros(&[1, 4]));
        let out = dec.forward(&mut tape, &bound, e, 12).unwrap();
        assert_eq!(tape.value(out).shape(), &[12, N_MELS]);
        let target_data: Vec<f64> = (0..12 * N_MELS).map(|i| (i % 5) as f64 - 2.0).collect();
        let mean_sq = target_data.iter().map(|v| v * v).sum::<f64>() / target_data.len() as f64;
        let target = tape.constant(Tensor::matrix(12, N_MELS, target_data).unwrap());
        let loss = tape.mse_loss(out, target).unwrap();
        assert!((tape.value(loss).item() - mean_sq).abs() < 1e-12);
    }

    #[test]
    fn immediate_eos_is_one_step_of_cross_entropy() {
        let mut store = ParamStore::new();
        let mut rng = stream(0, "ling");
        let dec = LinguisticDecoder::new("ling", 4, 7, &DecoderConfig::default(), &mut store, &mut rng);
        let mut tape = Tape::new();
        let bound = store.bind_frozen(&mut tape);
        let e = tape.constant(Tensor::row(vec![0.1, 0.2, -0.3, 0.4]));
        let logits = dec.forward_teacher(&mut tape, &bound, e, &[]).unwrap();
        assert_eq!(tape.value(logits).shape(), &[1, 7]);
        let row = tape.value(logits).data().to_vec();
        let lse = row.iter().map(|z| z.exp()).sum::<f64>().ln();
        let want = lse - row[Vocab::EOS_ID];
        let loss = dec.loss(&mut tape, &bound, e, &[]).unwrap();
        assert!((tape.value(loss).item() - want).abs() < 1e-12);
    }

    #[test]
    fn batched_loss_weights_tokens() {
        let mut store = ParamStore::new();
        let mut rng = stream(1, "ling");
        let dec = LinguisticDecoder::new("ling", 3, 8, &DecoderConfig::default(), &mut store, &mut rng);
        let mut tape = Tape::new();
        let bound = store.bind_frozen(&mut tape);
        let (ea, eb) = (vec![0.3, -0.1, 0.5], vec![-0.7, 0.2, 0.1]);
        let (ta, tb) = (vec![3, 4, 2, 5], vec![6]);
        let a = tape.constant(Tensor::row(ea.clone()));
        let b = tape.constant(Tensor::row(eb.clone()));
        let la = dec.loss(&mut tape, &bound, a, &ta).unwrap();
        let lb = dec.loss(&mut tape, &bound, b, &tb).unwrap();
        let (la, lb) = (tape.value(la).item(), tape.value(lb).item());
        let one = dec.loss_batch(&mut tape, &bound, a, &[ta.clone()]).unwrap();
        assert!((tape.value(one).item() - la).abs() < 1e-12);
        let both = tape.constant(Tensor::matrix(2, 3, [ea, eb].concat()).unwrap());
        let l = dec.loss_batch(&mut tape, &bound, both, &[ta, tb]).unwrap();
        assert!((tape.value(l).item() - (5.0 * la + 2.0 * lb) / 7.0).abs() < 1e-12);
    }

    #[test]
    fn logits_have_vocab_width_each_step() {
        let mut store = ParamStore::new();
        let mut rng = stream(0, "ling");
        let dec = LinguisticDecoder::new("ling", 4, 9, &DecoderConfig::default(), &mut store, &mut rng);
        let mut tape = Tape::new();
        let bound = store.bind_frozen(&mut tape);
        let e = tape.constant(Tensor::row(vec![0.5; 4]));
        let logits = dec.forward_teacher(&mut tape, &bound, e, &[3, 4, 2, 5]).unwrap();
        assert_eq!(tape.value(logits).shape(), &[5, 9]);
        let unrolled = dec.logits_unrolled(&mut tape, &bound, e, 6).unwrap();
        assert_eq!(tape.value(unrolled).shape(), &[6, 9]);
        assert!(dec.loss(&mut tape, &bound, e, &[3, 42]).is_err());
        let out = dec.greedy(&mut tape, &bound, e, 4).unwrap();
        assert!(out.len() <= 4);
    }
}
