use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    /// Mean of trunk features over time.
    Mean,
    /// Trunk features at the final frame.
    Last,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TcnConfig {
    pub kernel_size: usize,
    pub dilations: Vec<usize>,
    pub channels: usize,
    pub embedding_dim: usize,
    pub dropout: f64,
    pub pooling: Pooling,
    /// Exclude the first `receptive_field − 1` frames from mean pooling when
    /// the sequence is long enough.
    pub skip_warmup: bool,
}

impl Default for TcnConfig {
    fn default() -> Self {
        Self {
            kernel_size: 2,
            dilations: vec![1, 2, 4, 8, 16, 32],
            channels: 64,
            embedding_dim: 128,
            dropout: 0.1,
            pooling: Pooling::Mean,
            skip_warmup: false,
        }
    }
}

impl TcnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kernel_size == 0 {
            return Err(invalid("kernel_size must be >= 1"));
        }
        if self.dilations.is_empty() || self.dilations.iter().any(|d| *d == 0) {
            return Err(invalid("dilations must be nonempty and each >= 1"));
        }
        if self.channels == 0 || self.embedding_dim == 0 {
            return Err(invalid("channels and embedding_dim must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(invalid(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        Ok(())
    }

    /// Frames of input visible to one trunk position: `1 + Σ (k−1)·d`.
    pub fn receptive_field(&self) -> usize {
        1 + self
            .dilations
            .iter()
            .map(|d| (self.kernel_size - 1) * d)
            .sum::<usize>()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RnnConfig {
    pub hidden: usize,
}

impl Default for RnnConfig {
    fn default() -> Self {
        Self { hidden: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DanConfig {
    pub hidden: usize,
}

impl Default for DanConfig {
    fn default() -> Self {
        Self { hidden: 128 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub acoustic_hidden: usize,
    /// Width of the fixed sinusoidal position code; a multiple of 4.
    pub position_dim: usize,
    pub linguistic_hidden: usize,
    pub symbol_dim: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            acoustic_hidden: 128,
            position_dim: 16,
            linguistic_hidden: 128,
            symbol_dim: 16,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.position_dim == 0 || self.position_dim % 4 != 0 {
            return Err(invalid("position_dim must be a positive multiple of 4"));
        }
        if self.acoustic_hidden == 0 || self.linguistic_hidden == 0 || self.symbol_dim == 0 {
            return Err(invalid("decoder widths must be >= 1"));
        }
        Ok(())
    }
}

/// `L_total = λ_a·L_acoustic + λ_l·L_linguistic`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultitaskWeights {
    pub lambda_acoustic: f64,
    pub lambda_linguistic: f64,
}

impl Default for MultitaskWeights {
    fn default() -> Self {
        Self {
            lambda_acoustic: 1.0,
            lambda_linguistic: 1.0,
        }
    }
}

impl MultitaskWeights {
    pub fn new(lambda_acoustic: f64, lambda_linguistic: f64) -> Result<Self> {
        let w = Self {
            lambda_acoustic,
            lambda_linguistic,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.lambda_acoustic) || !ok(self.lambda_linguistic) {
            return Err(invalid("task weights must be finite and nonnegative"));
        }
        if self.lambda_acoustic == 0.0 && self.lambda_linguistic == 0.0 {
            return Err(invalid("at least one task weight must be positive"));
        }
        Ok(())
    }
}
