//! Deep averaging network: uniform average of segment vectors followed by
//! a two-hidden-layer ReLU network.

use rand_chacha::ChaCha8Rng;

use super::fuse_uniform_average;
use crate::error::Result;
use crate::params::{Bound, ParamId, ParamStore};
use crate::tensor::{Tape, Tensor, Var};

#[derive(Clone, Debug)]
pub struct DanEncoder {
    input_dim: usize,
    layers: [(ParamId, ParamId); 3],
}

impl DanEncoder {
    pub fn new(input_dim: usize, hidden: usize, embedding_dim: usize, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> Self {
        let dims = [(input_dim, hidden), (hidden, hidden), (hidden, embedding_dim)];
        let layers = [0, 1, 2].map(|l| {
            let (i, o) = dims[l];
            (
                store.add_glorot(format!("dan.layer{l}.weight"), &[i, o], i, o, rng),
                store.add_zeros(format!("dan.layer{l}.bias"), &[1, o]),
            )
        });
        Self { input_dim, layers }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layer_params(&self) -> &[(ParamId, ParamId); 3] {
        &self.layers
    }

    /// Network applied to an already-averaged row vector `[1 × input_dim]`.
    pub fn forward_average(&self, tape: &mut Tape, bound: &Bound, average: Var) -> Result<Var> {
        let mut h = average;
        for (l, (w, b)) in self.layers.iter().enumerate() {
            let z = tape.matmul(h, bound[*w])?;
            let z = tape.add_row(z, bound[*b])?;
            h = if l < 2 { tape.relu(z) } else { z };
        }
        Ok(h)
    }

    pub fn forward(&self, tape: &mut Tape, bound: &Bound, segments: &[Vec<f64>]) -> Result<Var> {
        let avg = fuse_uniform_average(segments)?;
        let avg = tape.constant(Tensor::row(avg));
        self.forward_average(tape, bound, avg)
    }
}

/// Evaluation-mode DAN fusion.
pub fn fuse_dan(segments: &[Vec<f64>], dan: &DanEncoder, store: &ParamStore) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let bound = store.bind_frozen(&mut tape);
    let out = dan.forward(&mut tape, &bound, segments)?;
    Ok(tape.value(out).data().to_vec())
}
