//! Minimal LSTM cell and the recurrent sentence encoder built on it.

use rand_chacha::ChaCha8Rng;

use super::config::RnnConfig;
use crate::error::{invalid, Result};
use crate::params::{Bound, ParamId, ParamStore};
use crate::tensor::{Tape, Tensor, Var};

/// Gates in order input, forget, cell, output. The caller supplies the
/// input contribution `x·W_x` so that it can be batched across time.
#[derive(Clone, Debug)]
pub struct LstmCell {
    pub hidden: usize,
    pub input_dim: usize,
    pub w_x: ParamId,
    pub w_h: ParamId,
    pub bias: ParamId,
}

impl LstmCell {
    pub fn new(prefix: &str, input_dim: usize, hidden: usize, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> Self {
        let w_x = store.add_glorot(format!("{prefix}.w_x"), &[input_dim, 4 * hidden], input_dim, hidden, rng);
        let w_h = store.add_glorot(format!("{prefix}.w_h"), &[hidden, 4 * hidden], hidden, hidden, rng);
        let mut b = Tensor::zeros(&[1, 4 * hidden]);
        // forget gate starts open
        b.data_mut()[hidden..2 * hidden].fill(1.0);
        let bias = store.add(format!("{prefix}.bias"), b);
        Self {
            hidden,
            input_dim,
            w_x,
            w_h,
            bias,
        }
    }

    /// One step from pre-multiplied input `xw[1×4H]`; returns `(h, c)`.
    pub fn step(&self, tape: &mut Tape, bound: &Bound, xw: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let hh = self.hidden;
        let rec = tape.matmul(h, bound[self.w_h])?;
        let gates = tape.add(xw, rec)?;
        let gates = tape.add_row(gates, bound[self.bias])?;
        let i = tape.slice_cols(gates, 0, hh)?;
        let f = tape.slice_cols(gates, hh, hh)?;
        let g = tape.slice_cols(gates, 2 * hh, hh)?;
        let o = tape.slice_cols(gates, 3 * hh, hh)?;
        let i = tape.sigmoid(i);
        let f = tape.sigmoid(f);
        let g = tape.tanh(g);
        let o = tape.sigmoid(o);
        let keep = tape.mul(f, c)?;
        let write = tape.mul(i, g)?;
        let c_next = tape.add(keep, write)?;
        let squashed = tape.tanh(c_next);
        let h_next = tape.mul(o, squashed)?;
        Ok((h_next, c_next))
    }

    pub fn zero_state(&self, tape: &mut Tape) -> (Var, Var) {
        let h = tape.constant(Tensor::zeros(&[1, self.hidden]));
        let c = tape.constant(Tensor::zeros(&[1, self.hidden]));
        (h, c)
    }
}

/// Left-to-right LSTM over frames; the final hidden state is projected to
/// the embedding width.
#[derive(Clone, Debug)]
pub struct RnnEncoder {
    cell: LstmCell,
    proj_w: ParamId,
    proj_b: ParamId,
    embedding_dim: usize,
}

impl RnnEncoder {
    pub fn new(
        config: &RnnConfig,
        input_dim: usize,
        embedding_dim: usize,
        store: &mut ParamStore,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if config.hidden == 0 || embedding_dim == 0 {
            return Err(invalid("rnn hidden and embedding widths must be >= 1"));
        }
        let cell = LstmCell::new("rnn.cell", input_dim, config.hidden, store, rng);
        let proj_w = store.add_glorot("rnn.proj.weight", &[config.hidden, embedding_dim], config.hidden, embedding_dim, rng);
        let proj_b = store.add_zeros("rnn.proj.bias", &[1, embedding_dim]);
        Ok(Self {
            cell,
            proj_w,
            proj_b,
            embedding_dim,
        })
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    /// `frames[T × input_dim]` (time-major) → `[1 × embedding_dim]`.
    pub fn forward(&self, tape: &mut Tape, bound: &Bound, frames: Var) -> Result<Var> {
        let shape = tape.value(frames).shape().to_vec();
        if shape.len() != 2 || shape[1] != self.cell.input_dim || shape[0] == 0 {
            return Err(invalid(format!(
                "rnn encoder expects [T>=1 × {}] input, got {shape:?}",
                self.cell.input_dim
            )));
        }
        let xw = tape.matmul(frames, bound[self.cell.w_x])?;
        let (mut h, mut c) = self.cell.zero_state(tape);
        for t in 0..shape[0] {
            let row = tape.select_row(xw, t)?;
            (h, c) = self.cell.step(tape, bound, row, h, c)?;
        }
        let proj = tape.matmul(h, bound[self.proj_w])?;
        tape.add_row(proj, bound[self.proj_b])
    }
}
