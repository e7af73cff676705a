//! Snippet encoders producing the intermediate representation `q`.

mod embedding;
mod imported;
mod tokenizer;
mod vocab;

use serde::{Deserialize, Serialize};

pub use embedding::{EmbeddingEncoder, EncoderSettings};
pub use imported::{import_embeddings, ImportedEncoder, VectorRecord};
pub use tokenizer::{split_identifier, Tokenizer, NUM_PLACEHOLDER, OPERATORS, STR_PLACEHOLDER};
pub use vocab::Vocabulary;

use crate::corpus::CodeSnippet;
use crate::error::Result;

/// Either a trainable token-embedding encoder or a frozen table of
/// externally computed vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Encoder {
    Embedding(EmbeddingEncoder),
    Imported(ImportedEncoder),
}

impl Encoder {
    pub fn dim(&self) -> usize {
        match self {
            Encoder::Embedding(e) => e.dim(),
            Encoder::Imported(e) => e.dim(),
        }
    }

    pub fn encode(&self, snippet: &CodeSnippet) -> Result<Vec<f64>> {
        match self {
            Encoder::Embedding(e) => Ok(e.encode(snippet)),
            Encoder::Imported(e) => e.get(&snippet.id).map(<[f64]>::to_vec),
        }
    }

    pub fn is_trainable(&self) -> bool {
        matches!(self, Encoder::Embedding(_))
    }
}

/// Where a fresh encoder for an experiment comes from.
#[derive(Debug, Clone)]
pub enum EncoderSource {
    /// Build vocabulary from the training split and initialise randomly.
    Trainable(EncoderSettings),
    /// Reuse imported vectors as a frozen encoder.
    Imported(std::sync::Arc<ImportedEncoder>),
}

impl EncoderSource {
    pub fn instantiate<'a>(
        &self,
        train: impl IntoIterator<Item = &'a CodeSnippet>,
        seed: u64,
    ) -> Result<Encoder> {
        match self {
            EncoderSource::Trainable(s) => Ok(Encoder::Embedding(EmbeddingEncoder::build(s, train, seed)?)),
            EncoderSource::Imported(e) => Ok(Encoder::Imported((**e).clone())),
        }
    }
}
