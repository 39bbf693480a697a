//! Named parameter storage shared by every trainable component.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tensor::{Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId(usize);

#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

/// Tape handles for every parameter of a store, indexed by [`ParamId`].
#[derive(Clone, Debug)]
pub struct Bound(Vec<Var>);

impl std::ops::Index<ParamId> for Bound {
    type Output = Var;
    fn index(&self, id: ParamId) -> &Var {
        &self.0[id.0]
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor) -> ParamId {
        self.names.push(name.into());
        self.tensors.push(tensor.with_grad());
        ParamId(self.tensors.len() - 1)
    }

    /// Uniform Glorot initialisation with the given fan sizes.
    pub fn add_glorot(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        fan_in: usize,
        fan_out: usize,
        rng: &mut ChaCha8Rng,
    ) -> ParamId {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-limit..limit)).collect();
        let t = Tensor::new(shape.to_vec(), data).expect("shape from caller");
        self.add(name, t)
    }

    pub fn add_zeros(&mut self, name: impl Into<String>, shape: &[usize]) -> ParamId {
        self.add(name, Tensor::zeros(shape))
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Records every parameter as a gradient-tracking leaf.
    pub fn bind(&self, tape: &mut Tape) -> Bound {
        Bound(self.tensors.iter().map(|t| tape.leaf(t.clone())).collect())
    }

    /// Records every parameter as a constant (inference).
    pub fn bind_frozen(&self, tape: &mut Tape) -> Bound {
        Bound(
            self.tensors
                .iter()
                .map(|t| tape.constant(t.clone()))
                .collect(),
        )
    }

    /// Adds `scale ·` tape gradients into each parameter's grad buffer.
    /// Parameters the loss does not reach receive zeros.
    pub fn accumulate(&mut self, tape: &Tape, bound: &Bound, scale: f64) {
        for (t, v) in self.tensors.iter_mut().zip(&bound.0) {
            let n = t.len();
            let g = t.grad.get_or_insert_with(|| vec![0.0; n]);
            if let Some(src) = tape.grad(*v) {
                for (d, s) in g.iter_mut().zip(src) {
                    *d += scale * s;
                }
            }
        }
    }

    pub fn zero_grads(&mut self) {
        for t in &mut self.tensors {
            t.grad = Some(vec![0.0; t.len()]);
        }
    }

    /// SHA-256 over parameter bytes in declared order.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (name, t) in self.names.iter().zip(&self.tensors) {
            h.update(name.as_bytes());
            for v in t.data() {
                h.update(v.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// Overwrites values from `(name, shape, data)` blocks in declared order.
    pub fn load_blocks(&mut self, blocks: Vec<(String, Vec<usize>, Vec<f64>)>) -> Result<()> {
        if blocks.len() != self.tensors.len() {
            return Err(Error::Format(format!(
                "expected {} parameter blocks, found {}",
                self.tensors.len(),
                blocks.len()
            )));
        }
        for ((name, t), (bname, shape, data)) in
            self.names.iter().zip(self.tensors.iter_mut()).zip(blocks)
        {
            if *name != bname || t.shape() != shape.as_slice() {
                return Err(Error::Format(format!(
                    "parameter {bname} {shape:?} does not match {name} {:?}",
                    t.shape()
                )));
            }
            t.data_mut().copy_from_slice(&data);
        }
        Ok(())
    }
}
