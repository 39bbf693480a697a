//! Deterministic synthetic speech corpus.
//!
//! Sentences are sequences of words, words are fixed phoneme strings, and
//! phonemes are rendered as sums of formant sinusoids over a voiced pitch
//! source. Speakers scale formants and base pitch; emotions change only
//! prosody (pitch slope, speaking rate, level and energy ramp), so emotion
//! is audible but never present in the transcript.

mod generate;
mod manifest;
mod phonemes;
mod split;

pub use generate::{generate_corpus, sentence_id, GenerateConfig, Lexicon, Rendered, Speaker, Synthesizer};
pub use manifest::{read_corpus, read_manifest, write_corpus, ManifestRecord, MANIFEST_FILE};
pub use phonemes::{phoneme_inventory, PhonemeTemplate};
pub use split::{fold_assignment, split_corpus, split_indices};

use serde::{Deserialize, Serialize};

use crate::dsp::AudioBuffer;
use crate::error::{invalid, Result};

pub const NUM_SPEAKERS: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedUnit {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

/// Ordered, non-overlapping `[start, end)` frame spans.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub units: Vec<AlignedUnit>,
}

impl Alignment {
    pub fn validate(&self, num_frames: usize) -> Result<()> {
        let mut prev_end = 0;
        for (i, u) in self.units.iter().enumerate() {
            if u.start >= u.end || u.end > num_frames || u.start < prev_end {
                return Err(invalid(format!(
                    "unit {i} ({}: {}..{}) is empty, overlaps, or exceeds {num_frames} frames",
                    u.label, u.start, u.end
                )));
            }
            prev_end = u.end;
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<&str> {
        self.units.iter().map(|u| u.label.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Neutral,
    Calm,
    Happy,
    Sad,
    Angry,
    Fearful,
    Surprised,
}

/// Prosodic realisation of an emotion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmotionProfile {
    /// Pitch change from sentence start to end, in semitones.
    pub pitch_slope_st: f64,
    /// Multiplier on phoneme durations.
    pub duration_factor: f64,
    pub level_db: f64,
    /// Gain change from sentence start to end, in dB.
    pub ramp_db: f64,
}

impl Emotion {
    pub const ALL: [Emotion; 7] = [
        Emotion::Neutral,
        Emotion::Calm,
        Emotion::Happy,
        Emotion::Sad,
        Emotion::Angry,
        Emotion::Fearful,
        Emotion::Surprised,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|e| *e == self).expect("listed")
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| invalid(format!("emotion index {i} out of range")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Neutral => "neutral",
            Emotion::Calm => "calm",
            Emotion::Happy => "happy",
            Emotion::Sad => "sad",
            Emotion::Angry => "angry",
            Emotion::Fearful => "fearful",
            Emotion::Surprised => "surprised",
        }
    }

    pub fn profile(self) -> EmotionProfile {
        let (pitch_slope_st, duration_factor, level_db, ramp_db) = match self {
            Emotion::Neutral => (0.0, 1.0, 0.0, 0.0),
            Emotion::Calm => (-2.0, 1.2, -4.0, 0.0),
            Emotion::Happy => (4.0, 0.8, 0.0, 6.0),
            Emotion::Sad => (-6.0, 1.2, -4.0, -6.0),
            Emotion::Angry => (-4.0, 0.8, 4.0, 0.0),
            Emotion::Fearful => (2.0, 1.0, 4.0, -6.0),
            Emotion::Surprised => (6.0, 1.0, 0.0, 6.0),
        };
        EmotionProfile {
            pitch_slope_st,
            duration_factor,
            level_db,
            ramp_db,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SentenceRecord {
    pub id: String,
    pub audio: AudioBuffer,
    /// Phoneme symbols, in order.
    pub transcript: Vec<String>,
    /// One unit per transcript phoneme.
    pub alignment: Alignment,
    /// One unit per word; labels are the word's phonemes joined by `-`.
    pub word_alignment: Alignment,
    pub emotion: Emotion,
    pub speaker_id: usize,
    /// Realised pitch slope in semitones.
    pub pitch_slope_st: f64,
}

impl SentenceRecord {
    /// Phonemes grouped by word.
    pub fn words(&self) -> Vec<Vec<String>> {
        self.word_alignment
            .units
            .iter()
            .map(|u| u.label.split('-').map(str::to_string).collect())
            .collect()
    }

    pub fn num_frames(&self) -> usize {
        crate::dsp::mel::num_frames(self.audio.len())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_frames();
        self.alignment.validate(n)?;
        self.word_alignment.validate(n)?;
        let labels: Vec<String> = self.alignment.units.iter().map(|u| u.label.clone()).collect();
        if labels != self.transcript {
            return Err(invalid(format!("{}: alignment labels differ from transcript", self.id)));
        }
        let flat: Vec<String> = self.words().into_iter().flatten().collect();
        if flat != self.transcript {
            return Err(invalid(format!("{}: words differ from transcript", self.id)));
        }
        if self.speaker_id >= NUM_SPEAKERS {
            return Err(invalid(format!("{}: speaker {} out of range", self.id, self.speaker_id)));
        }
        Ok(())
    }
}
