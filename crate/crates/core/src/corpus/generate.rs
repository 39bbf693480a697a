use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::phonemes::{phoneme_inventory, PhonemeTemplate};
use super::{AlignedUnit, Alignment, Emotion, SentenceRecord, NUM_SPEAKERS};
use crate::dsp::{mel, AudioBuffer, FRAME_LEN, FRAME_SHIFT, SAMPLE_RATE_HZ};
use crate::error::{invalid, Result};
use crate::rng::stream;

const BASE_AMPLITUDE: f64 = 0.1;
const FADE_SAMPLES: usize = 160;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateConfig {
    pub seed: u64,
    pub num_sentences: usize,
    /// Number of distinct words in the lexicon.
    pub vocab_size: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub min_word_phonemes: usize,
    pub max_word_phonemes: usize,
    /// `None` renders clean audio.
    pub noise_snr_db: Option<f64>,
    /// Draw every sentence from this many fixed transcripts.
    pub fixed_transcripts: Option<usize>,
    /// Cycle speakers and emotions instead of sampling them.
    pub balanced: bool,
    pub num_speakers: usize,
    pub id_prefix: String,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            num_sentences: 2000,
            vocab_size: 50,
            min_words: 3,
            max_words: 12,
            min_word_phonemes: 2,
            max_word_phonemes: 4,
            noise_snr_db: Some(30.0),
            fixed_transcripts: None,
            balanced: false,
            num_speakers: NUM_SPEAKERS,
            id_prefix: "utt".to_string(),
        }
    }
}

impl GenerateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_sentences == 0 {
            return Err(invalid("num_sentences must be >= 1"));
        }
        if self.vocab_size < 5 {
            return Err(invalid("vocab_size must be >= 5"));
        }
        if self.min_words == 0 || self.min_words > self.max_words {
            return Err(invalid(format!(
                "word range {}..={} is empty or starts at zero",
                self.min_words, self.max_words
            )));
        }
        if self.min_word_phonemes < 2 || self.min_word_phonemes > self.max_word_phonemes {
            return Err(invalid("words need at least two phonemes and a nonempty range"));
        }
        if self.num_speakers == 0 || self.num_speakers > NUM_SPEAKERS {
            return Err(invalid(format!("num_speakers must be in 1..={NUM_SPEAKERS}")));
        }
        if let Some(snr) = self.noise_snr_db {
            if !snr.is_finite() {
                return Err(invalid("noise SNR must be finite"));
            }
        }
        if self.fixed_transcripts == Some(0) {
            return Err(invalid("fixed_transcripts must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Speaker {
    pub id: usize,
    pub formant_factor: f64,
    pub f0_hz: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lexicon {
    pub phonemes: Vec<PhonemeTemplate>,
    /// Each word as phoneme indices; no phoneme repeats back to back.
    pub words: Vec<Vec<usize>>,
}

impl Lexicon {
    pub fn generate(config: &GenerateConfig) -> Result<Self> {
        let phonemes = phoneme_inventory();
        let mut rng = stream(config.seed, "lexicon");
        let mut words: Vec<Vec<usize>> = Vec::with_capacity(config.vocab_size);
        let mut attempts = 0usize;
        while words.len() < config.vocab_size {
            attempts += 1;
            if attempts > config.vocab_size * 1000 + 1000 {
                return Err(invalid(format!(
                    "cannot draw {} distinct words of {}..={} phonemes",
                    config.vocab_size, config.min_word_phonemes, config.max_word_phonemes
                )));
            }
            let len = rng.gen_range(config.min_word_phonemes..=config.max_word_phonemes);
            let mut w: Vec<usize> = Vec::with_capacity(len);
            while w.len() < len {
                let p = rng.gen_range(0..phonemes.len());
                if w.last() != Some(&p) {
                    w.push(p);
                }
            }
            if !words.contains(&w) {
                words.push(w);
            }
        }
        Ok(Self { phonemes, words })
    }

    pub fn phoneme_labels(&self) -> Vec<String> {
        self.phonemes.iter().map(|p| p.label.clone()).collect()
    }

    pub fn word_label(&self, word: usize) -> String {
        self.words[word]
            .iter()
            .map(|p| self.phonemes[*p].label.as_str())
            .collect::<Vec<_>>()
            .join("-")
    }
}

/// Audio plus labels for one rendered sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct Rendered {
    pub audio: AudioBuffer,
    pub transcript: Vec<String>,
    pub alignment: Alignment,
    pub word_alignment: Alignment,
    pub pitch_slope_st: f64,
}

#[derive(Clone, Debug)]
pub struct Synthesizer {
    pub lexicon: Lexicon,
    pub speakers: Vec<Speaker>,
}

// First frame whose centre falls at or after `sample`.
fn frame_at(sample: usize) -> usize {
    let centre_offset = FRAME_LEN / 2;
    if sample <= centre_offset {
        0
    } else {
        (sample - centre_offset).div_ceil(FRAME_SHIFT)
    }
}

fn fade(n: usize, len: usize) -> f64 {
    let f = FADE_SAMPLES.min(len / 2).max(1);
    let edge = n.min(len - 1 - n);
    if edge >= f {
        1.0
    } else {
        0.5 - 0.5 * (PI * (edge as f64 + 0.5) / f as f64).cos()
    }
}

impl Synthesizer {
    pub fn new(config: &GenerateConfig) -> Result<Self> {
        let lexicon = Lexicon::generate(config)?;
        let mut rng = stream(config.seed, "speakers");
        let speakers = (0..NUM_SPEAKERS)
            .map(|id| Speaker {
                id,
                formant_factor: rng.gen_range(0.94..1.06),
                f0_hz: rng.gen_range(100.0..160.0),
            })
            .collect();
        Ok(Self { lexicon, speakers })
    }

    /// Renders `words` (lexicon indices). The draws from `rng` do not depend
    /// on `emotion`, so the same stream with two emotions gives matched
    /// renderings that differ only in prosody.
    pub fn render(
        &self,
        words: &[usize],
        speaker: usize,
        emotion: Emotion,
        rng: &mut ChaCha8Rng,
        noise_snr_db: Option<f64>,
    ) -> Result<Rendered> {
        if words.is_empty() {
            return Err(invalid("cannot render an empty sentence"));
        }
        let spk = self
            .speakers
            .get(speaker)
            .ok_or_else(|| invalid(format!("speaker {speaker} out of range")))?;
        if let Some(w) = words.iter().find(|w| **w >= self.lexicon.words.len()) {
            return Err(invalid(format!("word {w} not in lexicon")));
        }
        let profile = emotion.profile();
        let slope = profile.pitch_slope_st + Normal::new(0.0, 0.4).expect("valid").sample(rng);
        let level = profile.level_db + Normal::new(0.0, 1.0).expect("valid").sample(rng);

        let phones: Vec<(usize, usize)> = words
            .iter()
            .enumerate()
            .flat_map(|(wi, w)| self.lexicon.words[*w].iter().map(move |p| (wi, *p)))
            .collect();
        let sr = SAMPLE_RATE_HZ as f64;
        let mut lengths = Vec::with_capacity(phones.len());
        let mut phases = Vec::with_capacity(phones.len());
        for (_, p) in &phones {
            let jitter: f64 = rng.gen_range(0.85..1.15);
            let ms = self.lexicon.phonemes[*p].base_duration_ms as f64 * profile.duration_factor * jitter;
            lengths.push((ms * sr / 1000.0).round().max(2.0) as usize);
            let ph: [f64; 3] = [rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI)];
            phases.push(ph);
        }
        let total: usize = lengths.iter().sum();
        if total < FRAME_LEN {
            return Err(invalid("rendered sentence shorter than one frame"));
        }

        let mut samples = Vec::with_capacity(total);
        let mut f0_phase = 0.0f64;
        let mut starts = Vec::with_capacity(phones.len());
        for (pi, (_, p)) in phones.iter().enumerate() {
            let tpl = &self.lexicon.phonemes[*p];
            let len = lengths[pi];
            starts.push(samples.len());
            for n in 0..len {
                let global = samples.len();
                let tau = global as f64 / total as f64 - 0.5;
                let f0 = spk.f0_hz * 2f64.powf(slope * tau / 12.0);
                f0_phase += 2.0 * PI * f0 / sr;
                let t = n as f64 / sr;
                let mut v = 0.0;
                if tpl.voiced {
                    v += 0.35 * f0_phase.sin() + 0.15 * (2.0 * f0_phase).sin();
                }
                for (k, (freq, amp)) in tpl.formants.iter().enumerate() {
                    let f = (freq * spk.formant_factor).min(7900.0);
                    v += amp * (2.0 * PI * f * t + phases[pi][k]).sin();
                }
                let gain = 10f64.powf((level + profile.ramp_db * tau) / 20.0);
                samples.push(BASE_AMPLITUDE * gain * fade(n, len) * v);
            }
        }

        if let Some(snr) = noise_snr_db {
            let rms = (samples.iter().map(|s| s * s).sum::<f64>() / total as f64).sqrt();
            let std = rms / 10f64.powf(snr / 20.0);
            if std > 0.0 {
                let noise = Normal::new(0.0, std).map_err(|e| invalid(e.to_string()))?;
                for s in samples.iter_mut() {
                    *s += noise.sample(rng);
                }
            }
        }
        for s in samples.iter_mut() {
            *s = s.clamp(-1.0, 1.0);
        }

        let num_frames = mel::num_frames(total);
        let mut frame_bounds: Vec<usize> = starts.iter().map(|s| frame_at(*s).min(num_frames)).collect();
        frame_bounds.push(num_frames);
        let mut units = Vec::with_capacity(phones.len());
        for (pi, (_, p)) in phones.iter().enumerate() {
            units.push(AlignedUnit {
                label: self.lexicon.phonemes[*p].label.clone(),
                start: frame_bounds[pi],
                end: frame_bounds[pi + 1],
            });
        }
        let mut word_units = Vec::with_capacity(words.len());
        let mut first = 0;
        for (wi, w) in words.iter().enumerate() {
            let n = self.lexicon.words[*w].len();
            word_units.push(AlignedUnit {
                label: self.lexicon.word_label(*w),
                start: frame_bounds[first],
                end: frame_bounds[first + n],
            });
            first += n;
            debug_assert!(phones[first - 1].0 == wi);
        }
        let alignment = Alignment { units };
        let word_alignment = Alignment { units: word_units };
        alignment.validate(num_frames)?;
        word_alignment.validate(num_frames)?;
        Ok(Rendered {
            audio: AudioBuffer::new(samples, SAMPLE_RATE_HZ)?,
            transcript: alignment.units.iter().map(|u| u.label.clone()).collect(),
            alignment,
            word_alignment,
            pitch_slope_st: slope,
        })
    }

    fn random_words(&self, config: &GenerateConfig, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let n = rng.gen_range(config.min_words..=config.max_words);
        (0..n).map(|_| rng.gen_range(0..self.lexicon.words.len())).collect()
    }
}

pub fn sentence_id(config: &GenerateConfig, index: usize) -> String {
    format!("{}{:06}", config.id_prefix, index)
}

/// Generates the whole corpus. Each sentence draws from its own stream, so
/// the result is independent of thread count.
pub fn generate_corpus(config: &GenerateConfig) -> Result<Vec<SentenceRecord>> {
    config.validate()?;
    let synth = Synthesizer::new(config)?;
    let fixed: Option<Vec<Vec<usize>>> = config.fixed_transcripts.map(|n| {
        let mut rng = stream(config.seed, "fixed-transcripts");
        (0..n).map(|_| synth.random_words(config, &mut rng)).collect()
    });
    let cycle = config.num_speakers * Emotion::ALL.len();
    (0..config.num_sentences)
        .into_par_iter()
        .map(|i| {
            let id = sentence_id(config, i);
            let mut rng = stream(config.seed, &format!("sentence/{id}"));
            let (speaker, emotion) = if config.balanced {
                (i % config.num_speakers, Emotion::ALL[(i / config.num_speakers) % Emotion::ALL.len()])
            } else {
                (
                    rng.gen_range(0..config.num_speakers),
                    *Emotion::ALL.choose(&mut rng).expect("nonempty"),
                )
            };
            let words = match &fixed {
                Some(list) if config.balanced => list[(i / cycle) % list.len()].clone(),
                Some(list) => list[rng.gen_range(0..list.len())].clone(),
                None => synth.random_words(config, &mut rng),
            };
            let r = synth.render(&words, speaker, emotion, &mut rng, config.noise_snr_db)?;
            Ok(SentenceRecord {
                id,
                audio: r.audio,
                transcript: r.transcript,
                alignment: r.alignment,
                word_alignment: r.word_alignment,
                emotion,
                speaker_id: speaker,
                pitch_slope_st: r.pitch_slope_st,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GenerateConfig {
        GenerateConfig {
            num_sentences: 12,
            vocab_size: 30,
            min_words: 2,
            max_words: 4,
            ..GenerateConfig::default()
        }
    }

    #[test]
    fn frame_mapping_starts_at_zero() {
        assert_eq!(frame_at(0), 0);
        assert_eq!(frame_at(200), 0);
        assert_eq!(frame_at(201), 1);
        assert_eq!(frame_at(360), 1);
    }

    #[test]
    fn records_are_consistent() {
        let corpus = generate_corpus(&small()).unwrap();
        assert_eq!(corpus.len(), 12);
        for r in &corpus {
            r.validate().unwrap();
            assert!(r.audio.samples().iter().all(|s| s.abs() <= 1.0));
        }
    }

    #[test]
    fn fast_emotion_shortens_audio() {
        let synth = Synthesizer::new(&small()).unwrap();
        let words = [0, 1, 2];
        let neutral = synth.render(&words, 0, Emotion::Neutral, &mut stream(1, "x"), None).unwrap();
        let fast = synth.render(&words, 0, Emotion::Happy, &mut stream(1, "x"), None).unwrap();
        let ratio = fast.audio.len() as f64 / neutral.audio.len() as f64;
        assert!((ratio - 0.8).abs() < 0.01, "ratio {ratio}");
        assert_eq!(fast.transcript, neutral.transcript);
    }

    #[test]
    fn balanced_fixed_transcripts_cover_cells() {
        let cfg = GenerateConfig {
            num_sentences: 2 * 7 * 4,
            num_speakers: 4,
            fixed_transcripts: Some(2),
            balanced: true,
            ..small()
        };
        let corpus = generate_corpus(&cfg).unwrap();
        let mut transcripts: Vec<&Vec<String>> = corpus.iter().map(|r| &r.transcript).collect();
        transcripts.sort();
        transcripts.dedup();
        assert!(transcripts.len() <= 2);
        for e in Emotion::ALL {
            assert_eq!(corpus.iter().filter(|r| r.emotion == e).count(), 8);
        }
    }
}
