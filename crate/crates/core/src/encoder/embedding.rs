use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::tokenizer::Tokenizer;
use super::vocab::Vocabulary;
use crate::corpus::CodeSnippet;
use crate::error::{Error, Result};
use crate::rng;

/// Hyperparameters of a trainable [`EmbeddingEncoder`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderSettings {
    pub tokenizer: Tokenizer,
    pub dim: usize,
    pub min_frequency: usize,
    pub oov_buckets: usize,
    /// Rows are initialised uniformly in `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for EncoderSettings {
    fn default() -> Self {
        Self {
            tokenizer: Tokenizer::default(),
            dim: 128,
            min_frequency: 1,
            oov_buckets: 64,
            init_scale: 0.1,
        }
    }
}

/// Mean of trainable token embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingEncoder {
    tokenizer: Tokenizer,
    vocab: Vocabulary,
    dim: usize,
    /// Row-major `vocab.rows() x dim`.
    table: Vec<f64>,
}

impl EmbeddingEncoder {
    /// Build the vocabulary from `train` and draw a random table.
    pub fn build<'a>(
        settings: &EncoderSettings,
        train: impl IntoIterator<Item = &'a CodeSnippet>,
        seed: u64,
    ) -> Result<Self> {
        if settings.dim == 0 {
            return Err(Error::Validation("embedding dimension must be at least 1".into()));
        }
        let streams: Vec<Vec<String>> = train
            .into_iter()
            .map(|s| settings.tokenizer.tokenize(&s.code))
            .collect();
        let vocab = Vocabulary::build(
            streams.iter().map(Vec::as_slice),
            settings.min_frequency,
            settings.oov_buckets,
        )?;
        let mut rng = rng::seeded(seed);
        let a = settings.init_scale;
        let table = (0..vocab.rows() * settings.dim)
            .map(|_| if a > 0.0 { rng.random_range(-a..=a) } else { 0.0 })
            .collect();
        Ok(Self {
            tokenizer: settings.tokenizer,
            vocab,
            dim: settings.dim,
            table,
        })
    }

    pub fn from_parts(tokenizer: Tokenizer, vocab: Vocabulary, dim: usize, table: Vec<f64>) -> Result<Self> {
        if table.len() != vocab.rows() * dim {
            return Err(Error::DimensionMismatch {
                expected: vocab.rows() * dim,
                got: table.len(),
            });
        }
        Ok(Self {
            tokenizer,
            vocab,
            dim,
            table,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn table_mut(&mut self) -> &mut [f64] {
        &mut self.table
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.table[i * self.dim..(i + 1) * self.dim]
    }

    /// Embedding rows of every token of `code`, in order.
    pub fn token_rows(&self, code: &str) -> Vec<usize> {
        self.tokenizer
            .tokenize(code)
            .iter()
            .map(|t| self.vocab.lookup(t))
            .collect()
    }

    /// Mean of the given rows; the zero vector when `rows` is empty.
    pub fn pool(&self, rows: &[usize]) -> Vec<f64> {
        let mut q = vec![0.0; self.dim];
        if rows.is_empty() {
            return q;
        }
        for &r in rows {
            for (acc, v) in q.iter_mut().zip(self.row(r)) {
                *acc += v;
            }
        }
        let n = rows.len() as f64;
        q.iter_mut().for_each(|v| *v /= n);
        q
    }

    pub fn encode(&self, snippet: &CodeSnippet) -> Vec<f64> {
        self.pool(&self.token_rows(&snippet.code))
    }

    /// Accumulate `grad` (w.r.t. the pooled vector) into `table_grad` for
    /// each of `rows`.
    pub fn backprop_pool(&self, rows: &[usize], grad: &[f64], table_grad: &mut [f64]) {
        if rows.is_empty() {
            return;
        }
        let n = rows.len() as f64;
        for &r in rows {
            let dst = &mut table_grad[r * self.dim..(r + 1) * self.dim];
            for (d, g) in dst.iter_mut().zip(grad) {
                *d += g / n;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn snippet(code: &str) -> CodeSnippet {
        CodeSnippet {
            id: "s".into(),
            code: code.into(),
            functionality: "f".into(),
            language: "java".into(),
        }
    }

    fn encoder(codes: &[&str], dim: usize) -> EmbeddingEncoder {
        let snippets: Vec<_> = codes.iter().map(|c| snippet(c)).collect();
        let settings = EncoderSettings {
            dim,
            oov_buckets: 4,
            ..Default::default()
        };
        EmbeddingEncoder::build(&settings, &snippets, 5).unwrap()
    }

    #[test]
    fn output_has_dimension_d() {
        let e = encoder(&["int a = b;"], 16);
        assert_eq!(e.encode(&snippet("return a + c;")).len(), 16);
    }

    #[test]
    fn zero_token_snippet_is_zero_vector() {
        let e = encoder(&["int a;"], 8);
        assert_eq!(e.encode(&snippet("// nothing")), vec![0.0; 8]);
    }

    #[test]
    fn single_repeated_token_gives_its_row() {
        let e = encoder(&["foo foo"], 8);
        let row = e.vocabulary().lookup("foo");
        assert_eq!(e.encode(&snippet("foo foo foo")), e.row(row));
    }

    #[test]
    fn encoding_never_grows_vocabulary() {
        let e = encoder(&["int a;"], 4);
        let before = e.vocabulary().clone();
        let _ = e.encode(&snippet("totally unseen tokens here"));
        assert_eq!(&before, e.vocabulary());
        assert!(e.token_rows("unseen").iter().all(|&r| r >= e.vocabulary().len()));
    }

    #[test]
    fn scaling_table_scales_output() {
        let mut e = encoder(&["int a = b + c;"], 8);
        let s = snippet("a = b + c + unknown;");
        let q = e.encode(&s);
        e.table_mut().iter_mut().for_each(|v| *v *= -2.5);
        let q2 = e.encode(&s);
        for (a, b) in q.iter().zip(&q2) {
            assert!((a * -2.5 - b).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn mean_pooling_is_order_free(mut words in proptest::collection::vec("[a-d]{1,2}", 1..12), seed in any::<u64>()) {
            let e = encoder(&["a b c d ab cd"], 8);
            let q = e.encode(&snippet(&words.join(" ")));
            let mut rng = crate::rng::seeded(seed);
            use rand::seq::SliceRandom;
            words.shuffle(&mut rng);
            let q2 = e.encode(&snippet(&words.join(" ")));
            for (a, b) in q.iter().zip(&q2) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
