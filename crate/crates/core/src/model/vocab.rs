use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAD: &str = "<pad>";
pub const EOS: &str = "<eos>";
/// Word boundary marker inside linguistic targets.
pub const BOUNDARY: &str = "|";

/// Output symbol inventory of the linguistic decoders.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    symbols: Vec<String>,
}

impl Vocab {
    pub const PAD_ID: usize = 0;
    pub const EOS_ID: usize = 1;
    pub const BOUNDARY_ID: usize = 2;

    pub fn new<S: AsRef<str>>(phonemes: &[S]) -> Self {
        let mut symbols = vec![PAD.to_string(), EOS.to_string(), BOUNDARY.to_string()];
        symbols.extend(phonemes.iter().map(|p| p.as_ref().to_string()));
        Self { symbols }
    }

    pub fn from_symbols(symbols: Vec<String>) -> Result<Self> {
        if symbols.len() < 3 || symbols[0] != PAD || symbols[1] != EOS || symbols[2] != BOUNDARY {
            return Err(Error::Format(
                "vocabulary must start with <pad>, <eos>, |".into(),
            ));
        }
        Ok(Self { symbols })
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn id(&self, symbol: &str) -> Result<usize> {
        self.symbols
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown symbol {symbol:?}")))
    }

    pub fn symbol(&self, id: usize) -> &str {
        &self.symbols[id]
    }

    /// Words of phonemes → ids, with a boundary symbol between words.
    pub fn encode_words<S: AsRef<str>>(&self, words: &[Vec<S>]) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for (i, w) in words.iter().enumerate() {
            if i > 0 {
                out.push(Self::BOUNDARY_ID);
            }
            for p in w {
                out.push(self.id(p.as_ref())?);
            }
        }
        Ok(out)
    }

    pub fn encode<S: AsRef<str>>(&self, symbols: &[S]) -> Result<Vec<usize>> {
        symbols.iter().map(|s| self.id(s.as_ref())).collect()
    }

    /// Phoneme ids only (boundaries and specials dropped).
    pub fn phonemes_of(ids: &[usize]) -> Vec<usize> {
        ids.iter().copied().filter(|i| *i > Self::BOUNDARY_ID).collect()
    }

    /// Splits an id sequence into words at boundary symbols; empty words
    /// are dropped.
    pub fn words_of(ids: &[usize]) -> Vec<Vec<usize>> {
        ids.split(|i| *i == Self::BOUNDARY_ID)
            .map(|w| w.iter().copied().filter(|i| *i > Self::BOUNDARY_ID).collect::<Vec<_>>())
            .filter(|w| !w.is_empty())
            .collect()
    }
}
