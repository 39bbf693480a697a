use rayon::prelude::*;

use crate::corpus::{phoneme_inventory, SentenceRecord};
use crate::dsp::{log_mel, FeatureStats, MelSpectrogram};
use crate::error::Result;
use crate::fusion::{Level, SegmentEmbeddingTable, SegmentSource};
use crate::model::Vocab;

/// `<pad>`, `<eos>`, `|`, then the phoneme inventory.
pub fn corpus_vocab() -> Vocab {
    let labels: Vec<String> = phoneme_inventory().into_iter().map(|p| p.label).collect();
    Vocab::new(&labels)
}

pub fn raw_mels(records: &[SentenceRecord]) -> Result<Vec<MelSpectrogram>> {
    records.par_iter().map(|r| log_mel(&r.audio)).collect()
}

/// Records with standardised features and encoded targets.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub records: Vec<SentenceRecord>,
    pub mels: Vec<MelSpectrogram>,
    pub targets: Vec<Vec<usize>>,
}

impl Dataset {
    pub fn new(records: Vec<SentenceRecord>, raw: Vec<MelSpectrogram>, stats: &FeatureStats, vocab: &Vocab) -> Result<Self> {
        let mels = raw.iter().map(|m| stats.apply(m)).collect();
        let targets = records
            .iter()
            .map(|r| vocab.encode_words(&r.words()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { records, mels, targets })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.records.iter().map(|r| r.id.clone()).collect()
    }

    pub fn num_frames(&self) -> Vec<usize> {
        self.mels.iter().map(MelSpectrogram::num_frames).collect()
    }

    pub fn sources(&self, level: Level) -> Vec<SegmentSource<'_>> {
        self.records
            .iter()
            .zip(&self.mels)
            .map(|(r, m)| SegmentSource {
                id: &r.id,
                mel: m,
                alignment: Some(level.alignment(r)),
            })
            .collect()
    }

    pub fn segments(&self, table: &SegmentEmbeddingTable) -> Result<Vec<Vec<Vec<f64>>>> {
        self.records.iter().map(|r| table.record_segments(r)).collect()
    }
}
