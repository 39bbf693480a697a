//! Binary parameter container.
//!
//! Layout: `u32` little-endian header length, a JSON header of that many
//! bytes, then each block's `f64` values little-endian in header order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{ModelConfig, SentenceModel, Vocab};
use crate::params::ParamStore;

pub const FORMAT_VERSION: u32 = 1;
pub const KIND_SENTENCE_MODEL: &str = "sentence-model";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub kind: String,
    pub config: Value,
    #[serde(default)]
    pub vocab: Option<Vec<String>>,
    #[serde(default)]
    pub metadata: Value,
    pub blocks: Vec<BlockInfo>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub header: Header,
    pub data: Vec<Vec<f64>>,
}

impl Container {
    pub fn new(kind: &str, config: Value, vocab: Option<Vec<String>>, metadata: Value) -> Self {
        Self {
            header: Header {
                format_version: FORMAT_VERSION,
                kind: kind.to_string(),
                config,
                vocab,
                metadata,
                blocks: Vec::new(),
            },
            data: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) {
        self.header.blocks.push(BlockInfo {
            name: name.into(),
            shape,
        });
        self.data.push(data);
    }

    pub fn push_store(&mut self, store: &ParamStore) {
        for (name, t) in store.names().iter().zip(store.tensors()) {
            self.push(name.clone(), t.shape().to_vec(), t.data().to_vec());
        }
    }

    pub fn blocks(&self) -> Vec<(String, Vec<usize>, Vec<f64>)> {
        self.header
            .blocks
            .iter()
            .zip(&self.data)
            .map(|(b, d)| (b.name.clone(), b.shape.clone(), d.clone()))
            .collect()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let header = serde_json::to_vec(&self.header)?;
        let len = u32::try_from(header.len()).map_err(|_| Error::Format("header too large".into()))?;
        let mut bytes = Vec::with_capacity(4 + header.len() + 8 * self.data.iter().map(Vec::len).sum::<usize>());
        bytes.extend_from_slice(&len.to_le_bytes());
        bytes.extend_from_slice(&header);
        for d in &self.data {
            for v in d {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        let mut f = fs::File::create(path)?;
        f.write_all(&bytes)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 4 {
            return Err(Error::Format("truncated container".into()));
        }
        let len = u32::from_le_bytes(bytes[..4].try_into().expect("4 bytes")) as usize;
        let body = bytes
            .get(4..4 + len)
            .ok_or_else(|| Error::Format("truncated header".into()))?;
        let header: Header = serde_json::from_slice(body)?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {}",
                header.format_version
            )));
        }
        let mut offset = 4 + len;
        let mut data = Vec::with_capacity(header.blocks.len());
        for b in &header.blocks {
            let n: usize = b.shape.iter().product();
            let raw = bytes
                .get(offset..offset + 8 * n)
                .ok_or_else(|| Error::Format(format!("block {} truncated", b.name)))?;
            data.push(
                raw.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                    .collect(),
            );
            offset += 8 * n;
        }
        if offset != bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes", bytes.len() - offset)));
        }
        Ok(Self { header, data })
    }
}

pub fn save_model(path: impl AsRef<Path>, model: &SentenceModel, metadata: Value) -> Result<()> {
    let mut c = Container::new(
        KIND_SENTENCE_MODEL,
        serde_json::to_value(model.config())?,
        Some(model.vocab().symbols().to_vec()),
        metadata,
    );
    c.push_store(&model.store);
    c.write(path)
}

/// Rebuilds a model from its config and vocabulary, then restores values.
pub fn load_model(path: impl AsRef<Path>) -> Result<(SentenceModel, Value)> {
    let c = Container::read(path)?;
    if c.header.kind != KIND_SENTENCE_MODEL {
        return Err(Error::Format(format!("expected a sentence model, found {}", c.header.kind)));
    }
    let config: ModelConfig = serde_json::from_value(c.header.config.clone())?;
    let vocab = Vocab::from_symbols(
        c.header
            .vocab
            .clone()
            .ok_or_else(|| Error::Format("checkpoint has no vocabulary".into()))?,
    )?;
    let mut model = SentenceModel::new(config, vocab, 0)?;
    let metadata = c.header.metadata.clone();
    model.store.load_blocks(c.blocks())?;
    Ok((model, metadata))
}
