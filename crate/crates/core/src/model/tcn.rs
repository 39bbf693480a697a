//! Dilated causal convolutional encoder.
//!
//! Each level is `causal conv → ReLU → dropout`, with a residual connection
//! whenever input and output widths agree. The trunk keeps the time axis
//! intact; pooling over time followed by a linear projection yields the
//! fixed-size sentence embedding.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{Pooling, TcnConfig};
use crate::dsp::N_MELS;
use crate::error::{invalid, Result};
use crate::params::{Bound, ParamId, ParamStore};
use crate::tensor::{Tape, Tensor, Var};

#[derive(Clone, Debug)]
struct Level {
    weight: ParamId,
    bias: ParamId,
    dilation: usize,
    residual: bool,
}

#[derive(Clone, Debug)]
pub struct TcnEncoder {
    config: TcnConfig,
    input_dim: usize,
    levels: Vec<Level>,
    proj_w: ParamId,
    proj_b: ParamId,
}

pub(crate) fn dropout_mask(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<f64> {
    let keep = 1.0 - p;
    (0..n)
        .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect()
}

impl TcnEncoder {
    pub fn new(
        config: &TcnConfig,
        input_dim: usize,
        store: &mut ParamStore,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        config.validate()?;
        let k = config.kernel_size;
        let c = config.channels;
        let mut levels = Vec::with_capacity(config.dilations.len());
        let mut in_ch = input_dim;
        for (l, &d) in config.dilations.iter().enumerate() {
            let weight = store.add_glorot(
                format!("tcn.level{l}.weight"),
                &[c, in_ch, k],
                in_ch * k,
                c * k,
                rng,
            );
            let bias = store.add_zeros(format!("tcn.level{l}.bias"), &[c]);
            levels.push(Level {
                weight,
                bias,
                dilation: d,
                residual: in_ch == c,
            });
            in_ch = c;
        }
        let proj_w = store.add_glorot("tcn.proj.weight", &[c, config.embedding_dim], c, config.embedding_dim, rng);
        let proj_b = store.add_zeros("tcn.proj.bias", &[1, config.embedding_dim]);
        Ok(Self {
            config: config.clone(),
            input_dim,
            levels,
            proj_w,
            proj_b,
        })
    }

    pub fn config(&self) -> &TcnConfig {
        &self.config
    }

    pub fn for_mels(config: &TcnConfig, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> Result<Self> {
        Self::new(config, N_MELS, store, rng)
    }

    /// Trunk activations `[channels × T]` from channel-major input `[input_dim × T]`.
    /// Dropout is applied only when `train` carries an RNG.
    pub fn trunk(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        x: Var,
        mut train: Option<&mut ChaCha8Rng>,
    ) -> Result<Var> {
        let shape = tape.value(x).shape().to_vec();
        if shape.len() != 2 || shape[0] != self.input_dim || shape[1] == 0 {
            return Err(invalid(format!(
                "encoder expects [{} × T>=1] input, got {shape:?}",
                self.input_dim
            )));
        }
        let mut h = x;
        for level in &self.levels {
            let conv = tape.conv1d_causal(h, bound[level.weight], level.dilation)?;
            let conv = tape.add_col(conv, bound[level.bias])?;
            let mut out = tape.relu(conv);
            if let Some(rng) = train.as_deref_mut() {
                if self.config.dropout > 0.0 {
                    let n = tape.value(out).len();
                    out = tape.mask(out, dropout_mask(rng, n, self.config.dropout))?;
                }
            }
            h = if level.residual { tape.add(out, h)? } else { out };
        }
        Ok(h)
    }

    /// Pooled and projected embedding `[1 × embedding_dim]`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        x: Var,
        train: Option<&mut ChaCha8Rng>,
    ) -> Result<Var> {
        let trunk = self.trunk(tape, bound, x, train)?;
        let t = tape.value(trunk).cols();
        let pooled = match self.config.pooling {
            Pooling::Mean => {
                let warm = self.config.receptive_field() - 1;
                let start = if self.config.skip_warmup && t > warm { warm } else { 0 };
                tape.mean_pool_time(trunk, start)?
            }
            Pooling::Last => tape.select_col(trunk, t - 1)?,
        };
        let proj = tape.matmul(pooled, bound[self.proj_w])?;
        tape.add_row(proj, bound[self.proj_b])
    }

    /// Channel-major input tensor `[input_dim × T]`.
    pub fn input_tensor(&self, channels_first: Vec<f64>, frames: usize) -> Result<Tensor> {
        Tensor::matrix(self.input_dim, frames, channels_first)
    }
}
