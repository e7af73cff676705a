use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::fnv1a64;

/// Token to row-index map.
///
/// Known tokens occupy rows `0..len()`, ordered by descending training
/// frequency and then lexicographically. Every other token hashes (64-bit
/// FNV-1a over its UTF-8 bytes, modulo `oov_buckets`) into one of the rows
/// `len()..len() + oov_buckets`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabularyParts", into = "VocabularyParts")]
pub struct Vocabulary {
    tokens: Vec<String>,
    min_frequency: usize,
    oov_buckets: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyParts {
    tokens: Vec<String>,
    min_frequency: usize,
    oov_buckets: usize,
}

impl From<VocabularyParts> for Vocabulary {
    fn from(p: VocabularyParts) -> Self {
        Vocabulary::from_parts(p.tokens, p.min_frequency, p.oov_buckets.max(1))
    }
}

impl From<Vocabulary> for VocabularyParts {
    fn from(v: Vocabulary) -> Self {
        VocabularyParts {
            tokens: v.tokens,
            min_frequency: v.min_frequency,
            oov_buckets: v.oov_buckets,
        }
    }
}

impl Vocabulary {
    /// Build from the token streams of training snippets only.
    pub fn build<'a, I>(token_streams: I, min_frequency: usize, oov_buckets: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        if oov_buckets == 0 {
            return Err(Error::Validation("oov_buckets must be at least 1".into()));
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for stream in token_streams {
            for t in stream {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_frequency.max(1))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let tokens = kept.into_iter().map(|(t, _)| t.to_string()).collect();
        Ok(Self::from_parts(tokens, min_frequency, oov_buckets))
    }

    pub fn from_parts(tokens: Vec<String>, min_frequency: usize, oov_buckets: usize) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self {
            tokens,
            min_frequency,
            oov_buckets,
            index,
        }
    }

    /// Number of known tokens.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn oov_buckets(&self) -> usize {
        self.oov_buckets
    }

    pub fn min_frequency(&self) -> usize {
        self.min_frequency
    }

    /// Total rows an embedding table needs.
    pub fn rows(&self) -> usize {
        self.tokens.len() + self.oov_buckets
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn lookup(&self, token: &str) -> usize {
        match self.index.get(token) {
            Some(&i) => i,
            None => self.tokens.len() + (fnv1a64(token.as_bytes()) % self.oov_buckets as u64) as usize,
        }
    }
}
