use std::sync::OnceLock;

use super::{fft, AudioBuffer, MelSpectrogram, FRAME_LEN, FRAME_SHIFT, LOG_FLOOR, N_FFT, N_MELS};
use crate::error::{invalid, Result};

/// HTK mel scale, `1127·ln(1 + f/700)`.
pub fn hz_to_mel(f: f64) -> Result<f64> {
    if !(f >= 0.0) {
        return Err(invalid(format!("frequency must be >= 0 Hz, got {f}")));
    }
    Ok(1127.0 * (1.0 + f / 700.0).ln())
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * ((m / 1127.0).exp() - 1.0)
}

/// Triangular filters on the mel scale, `n_filters × (n_fft/2 + 1)`.
#[derive(Clone, Debug)]
pub struct MelFilterbank {
    n_filters: usize,
    n_bins: usize,
    bin_hz: f64,
    /// `n_filters + 2` band edges in Hz; filter `m` spans `edges[m]..edges[m+2]`.
    edges_hz: Vec<f64>,
    weights: Vec<f64>,
}

impl MelFilterbank {
    pub fn n_filters(&self) -> usize {
        self.n_filters
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.weights[m * self.n_bins..(m + 1) * self.n_bins]
    }

    pub fn center_hz(&self, m: usize) -> f64 {
        self.edges_hz[m + 1]
    }

    pub fn centers_hz(&self) -> Vec<f64> {
        (0..self.n_filters).map(|m| self.center_hz(m)).collect()
    }

    pub fn bin_hz(&self) -> f64 {
        self.bin_hz
    }

    /// Continuous triangle of filter `m` evaluated at `f` Hz; 1 at the centre.
    pub fn response(&self, m: usize, f: f64) -> f64 {
        let (lo, c, hi) = (self.edges_hz[m], self.edges_hz[m + 1], self.edges_hz[m + 2]);
        if f <= lo || f >= hi {
            0.0
        } else if f <= c {
            (f - lo) / (c - lo)
        } else {
            (hi - f) / (hi - c)
        }
    }

    /// `power[n_bins]` → `energies[n_filters]`.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.weights
            .chunks(self.n_bins)
            .map(|row| row.iter().zip(power).map(|(w, p)| w * p).sum())
            .collect()
    }
}

/// Filters with centres uniformly spaced in mel between 0 Hz and Nyquist.
pub fn mel_filterbank(n_filters: usize, n_fft: usize, sample_rate: u32) -> Result<MelFilterbank> {
    if n_fft == 0 || !n_fft.is_power_of_two() {
        return Err(invalid(format!("n_fft {n_fft} is not a power of two")));
    }
    if n_filters == 0 {
        return Err(invalid("n_filters must be >= 1"));
    }
    let nyquist = f64::from(sample_rate) / 2.0;
    let mel_hi = hz_to_mel(nyquist)?;
    let edges_hz: Vec<f64> = (0..n_filters + 2)
        .map(|i| mel_to_hz(mel_hi * i as f64 / (n_filters + 1) as f64))
        .collect();
    let n_bins = n_fft / 2 + 1;
    let bin_hz = f64::from(sample_rate) / n_fft as f64;
    let mut fb = MelFilterbank {
        n_filters,
        n_bins,
        bin_hz,
        edges_hz,
        weights: vec![0.0; n_filters * n_bins],
    };
    for m in 0..n_filters {
        for j in 0..n_bins {
            fb.weights[m * n_bins + j] = fb.response(m, j as f64 * bin_hz);
        }
    }
    Ok(fb)
}

fn default_filterbank() -> &'static MelFilterbank {
    static FB: OnceLock<MelFilterbank> = OnceLock::new();
    FB.get_or_init(|| {
        mel_filterbank(N_MELS, N_FFT, super::SAMPLE_RATE_HZ).expect("constant configuration")
    })
}

fn hann_window() -> &'static [f64] {
    static W: OnceLock<Vec<f64>> = OnceLock::new();
    W.get_or_init(|| {
        let n = FRAME_LEN as f64;
        (0..FRAME_LEN)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1.0)).cos())
            .collect()
    })
}

pub fn num_frames(num_samples: usize) -> usize {
    if num_samples < FRAME_LEN {
        0
    } else {
        1 + (num_samples - FRAME_LEN) / FRAME_SHIFT
    }
}

/// Pre-log mel energies, `num_frames × 80` row-major.
pub fn mel_energies(audio: &AudioBuffer) -> Result<Vec<f64>> {
    let samples = audio.samples();
    let frames = num_frames(samples.len());
    if frames == 0 {
        return Err(invalid(format!(
            "audio of {} samples is shorter than one {FRAME_LEN}-sample frame",
            samples.len()
        )));
    }
    let fb = default_filterbank();
    let window = hann_window();
    let mut out = Vec::with_capacity(frames * N_MELS);
    let mut frame = vec![0.0; FRAME_LEN];
    for f in 0..frames {
        let start = f * FRAME_SHIFT;
        for ((d, s), w) in frame
            .iter_mut()
            .zip(&samples[start..start + FRAME_LEN])
            .zip(window)
        {
            *d = s * w;
        }
        let power = fft::power_spectrum(&frame, N_FFT)?;
        out.extend(fb.apply(&power));
    }
    Ok(out)
}

/// 25 ms Hann frames every 10 ms, 512-point FFT power, 80 mel filters,
/// `ln(max(e, 1e-10))`.
pub fn log_mel(audio: &AudioBuffer) -> Result<MelSpectrogram> {
    let energies = mel_energies(audio)?;
    let frames = energies.len() / N_MELS;
    let data = energies.into_iter().map(|e| e.max(LOG_FLOOR).ln()).collect();
    MelSpectrogram::new(frames, data)
}
