//! Snippets, labeled pairs, corpus I/O, balanced sampling and synthetic
//! corpora.

mod io;
mod model;
mod sampler;
mod synth;

pub use io::{load_corpus, load_corpus_files, read_jsonl, save_corpus, write_jsonl, PAIRS_FILE, SNIPPETS_FILE};
pub use model::{functionality_histogram, ClassCounts, CodeSnippet, Label, LabeledPair, PairCorpus};
pub use sampler::{sample_balanced, SamplerConfig};
pub use synth::{synthesize, synthesize_corpus, synthetic_functionality, SynthConfig};
