//! 16 kHz waveform to 80-bin natural-log mel spectrogram.

pub mod fft;
pub mod mel;
pub mod wav;

pub use mel::{hz_to_mel, log_mel, mel_energies, mel_filterbank, mel_to_hz, MelFilterbank};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const SAMPLE_RATE_HZ: u32 = 16_000;
pub const N_MELS: usize = 80;
pub const N_FFT: usize = 512;
pub const FRAME_LENGTH_MS: u32 = 25;
pub const FRAME_SHIFT_MS: u32 = 10;
pub const FRAME_LEN: usize = 400;
pub const FRAME_SHIFT: usize = 160;
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz != SAMPLE_RATE_HZ {
            return Err(Error::UnsupportedAudio(format!(
                "sample rate {sample_rate_hz} Hz, expected {SAMPLE_RATE_HZ} Hz"
            )));
        }
        if let Some((i, s)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| !s.is_finite() || s.abs() > 1.0)
        {
            return Err(invalid(format!("sample {i} = {s} outside [-1, 1]")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }
}

/// `num_frames × 80` matrix of natural-log mel energies, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MelSpectrogram {
    data: Vec<f64>,
    num_frames: usize,
}

impl MelSpectrogram {
    pub fn new(num_frames: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != num_frames * N_MELS {
            return Err(Error::ShapeMismatch {
                op: "mel_spectrogram",
                left: vec![num_frames, N_MELS],
                right: vec![data.len()],
            });
        }
        Ok(Self { data, num_frames })
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * N_MELS..(t + 1) * N_MELS]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Frames `[start, end)` as a new spectrogram.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.num_frames {
            return Err(Error::OutOfRange(format!(
                "frames {start}..{end} of {}",
                self.num_frames
            )));
        }
        Self::new(end - start, self.data[start * N_MELS..end * N_MELS].to_vec())
    }

    /// Channel-major copy, `80 × num_frames`, as consumed by the encoders.
    pub fn channels_first(&self) -> Vec<f64> {
        let t = self.num_frames;
        let mut out = vec![0.0; N_MELS * t];
        for (f, frame) in self.data.chunks(N_MELS).enumerate() {
            for (c, v) in frame.iter().enumerate() {
                out[c * t + f] = *v;
            }
        }
        out
    }
}

/// Per-bin standardisation statistics, estimated on a training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureStats {
    /// Leaves features unchanged.
    pub fn identity() -> Self {
        Self {
            mean: vec![0.0; N_MELS],
            std: vec![1.0; N_MELS],
        }
    }

    pub fn estimate<'a>(mels: impl IntoIterator<Item = &'a MelSpectrogram>) -> Result<Self> {
        let mut sum = vec![0.0; N_MELS];
        let mut sq = vec![0.0; N_MELS];
        let mut n = 0usize;
        for m in mels {
            for frame in m.data.chunks(N_MELS) {
                for (c, v) in frame.iter().enumerate() {
                    sum[c] += v;
                    sq[c] += v * v;
                }
                n += 1;
            }
        }
        if n == 0 {
            return Err(invalid("no frames to estimate feature statistics"));
        }
        let nf = n as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| (q / nf - m * m).max(0.0).sqrt().max(1e-6))
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, mel: &MelSpectrogram) -> MelSpectrogram {
        let mut data = mel.data.clone();
        for frame in data.chunks_mut(N_MELS) {
            for ((v, m), s) in frame.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        MelSpectrogram {
            data,
            num_frames: mel.num_frames,
        }
    }
}
