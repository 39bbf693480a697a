//! Spoken sentence embeddings from a dilated causal temporal convolutional
//! encoder trained to reconstruct both the log-mel input and the phoneme
//! transcript, plus the phoneme/word fusion baselines and the downstream
//! evaluation harness used to compare them.

pub mod checkpoint;
pub mod corpus;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod model;
pub mod params;
pub mod pipeline;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Tape, Tensor, Var};
