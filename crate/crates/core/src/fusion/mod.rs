//! Sentence vectors built from per-segment (word or phoneme) vectors.

pub mod dan;
pub mod segments;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use dan::{fuse_dan, DanEncoder};
pub use segments::{train_segment_embeddings, SegmentEncoder, KIND_SEGMENT_ENCODER, SegmentSource, SegmentTrainConfig, SegmentTraining};

use crate::checkpoint::Container;
use crate::corpus::{Alignment, SentenceRecord};
use crate::error::{invalid, Error, Result};

pub const KIND_SEGMENT_TABLE: &str = "segment-table";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Word,
    Phoneme,
}

impl Level {
    pub fn alignment(self, record: &SentenceRecord) -> &Alignment {
        match self {
            Level::Word => &record.word_alignment,
            Level::Phoneme => &record.alignment,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Level::Word => "word",
            Level::Phoneme => "phoneme",
        }
    }
}

impl std::str::FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word" => Ok(Level::Word),
            "phoneme" => Ok(Level::Phoneme),
            other => Err(invalid(format!("unknown level {other:?}"))),
        }
    }
}

/// Elementwise mean of the segment vectors.
///
/// Summation runs in a canonical order (lexicographic over the vectors), so
/// the result is bitwise identical under any permutation of the input.
pub fn fuse_uniform_average(segments: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = segments
        .first()
        .ok_or_else(|| invalid("cannot fuse an empty segment list"))?;
    let dim = first.len();
    if let Some(bad) = segments.iter().find(|s| s.len() != dim) {
        return Err(Error::ShapeMismatch {
            op: "fuse_uniform_average",
            left: vec![dim],
            right: vec![bad.len()],
        });
    }
    let mut order: Vec<&Vec<f64>> = segments.iter().collect();
    order.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut sum = vec![0.0; dim];
    for s in order {
        for (acc, v) in sum.iter_mut().zip(s) {
            *acc += v;
        }
    }
    let n = segments.len() as f64;
    Ok(sum.into_iter().map(|v| v / n).collect())
}

pub fn segment_key(record_id: &str, index: usize) -> String {
    format!("{record_id}/{index}")
}

/// Segment vectors keyed by `"<record id>/<segment index>"`.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentEmbeddingTable {
    pub level: Level,
    pub dim: usize,
    pub entries: BTreeMap<String, Vec<f64>>,
}

impl SegmentEmbeddingTable {
    pub fn new(level: Level, dim: usize) -> Self {
        Self {
            level,
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, record_id: &str, index: usize, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::ShapeMismatch {
                op: "segment table insert",
                left: vec![self.dim],
                right: vec![vector.len()],
            });
        }
        self.entries.insert(segment_key(record_id, index), vector);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The vectors of a record's segments, in order.
    pub fn segments_for(&self, record_id: &str, count: usize) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Err(invalid(format!("{record_id} has no segments")));
        }
        (0..count)
            .map(|i| {
                let key = segment_key(record_id, i);
                self.entries
                    .get(&key)
                    .cloned()
                    .ok_or_else(|| invalid(format!("no segment vector for {key}")))
            })
            .collect()
    }

    pub fn record_segments(&self, record: &SentenceRecord) -> Result<Vec<Vec<f64>>> {
        self.segments_for(&record.id, self.level.alignment(record).len())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut c = Container::new(
            KIND_SEGMENT_TABLE,
            serde_json::json!({ "level": self.level, "dim": self.dim }),
            None,
            serde_json::Value::Null,
        );
        for (k, v) in &self.entries {
            c.push(k.clone(), vec![self.dim], v.clone());
        }
        c.write(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let c = Container::read(path)?;
        if c.header.kind != KIND_SEGMENT_TABLE {
            return Err(Error::Format(format!("expected a segment table, found {}", c.header.kind)));
        }
        let level: Level = serde_json::from_value(c.header.config["level"].clone())?;
        let dim = c.header.config["dim"]
            .as_u64()
            .ok_or_else(|| Error::Format("segment table without dim".into()))? as usize;
        let mut table = Self::new(level, dim);
        for (name, _, data) in c.blocks() {
            if data.len() != dim {
                return Err(Error::Format(format!("segment {name} has {} values", data.len())));
            }
            table.entries.insert(name, data);
        }
        Ok(table)
    }
}
