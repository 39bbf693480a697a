use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{AlignedUnit, Alignment, Emotion, SentenceRecord};
use crate::dsp::wav::{read_wav, write_wav};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// One manifest line. `wav_path` is relative to the corpus directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub wav_path: String,
    pub transcript: Vec<String>,
    pub alignment: Vec<AlignedUnit>,
    pub word_alignment: Vec<AlignedUnit>,
    pub emotion: Emotion,
    pub speaker_id: usize,
    pub pitch_slope: f64,
}

/// Writes `wav/<id>.wav` per record plus `manifest.jsonl`.
pub fn write_corpus(dir: impl AsRef<Path>, records: &[SentenceRecord]) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir.join("wav"))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut out = BufWriter::new(fs::File::create(&manifest_path)?);
    for r in records {
        let wav_path = format!("wav/{}.wav", r.id);
        write_wav(dir.join(&wav_path), &r.audio)?;
        let line = ManifestRecord {
            id: r.id.clone(),
            wav_path,
            transcript: r.transcript.clone(),
            alignment: r.alignment.units.clone(),
            word_alignment: r.word_alignment.units.clone(),
            emotion: r.emotion,
            speaker_id: r.speaker_id,
            pitch_slope: r.pitch_slope_st,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(manifest_path)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRecord>> {
    let path = path.as_ref();
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ManifestRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// Loads a corpus directory written by [`write_corpus`].
pub fn read_corpus(dir: impl AsRef<Path>) -> Result<Vec<SentenceRecord>> {
    let dir = dir.as_ref();
    read_manifest(dir.join(MANIFEST_FILE))?
        .into_iter()
        .map(|m| {
            let record = SentenceRecord {
                audio: read_wav(dir.join(&m.wav_path))?,
                id: m.id,
                transcript: m.transcript,
                alignment: Alignment { units: m.alignment },
                word_alignment: Alignment { units: m.word_alignment },
                emotion: m.emotion,
                speaker_id: m.speaker_id,
                pitch_slope_st: m.pitch_slope,
            };
            record.validate()?;
            Ok(record)
        })
        .collect()
}
