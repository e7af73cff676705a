//! JSONL persistence for corpora.
//!
//! A corpus lives in a directory holding `snippets.jsonl` and `pairs.jsonl`,
//! one JSON object per LF-terminated line.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::model::{CodeSnippet, LabeledPair, PairCorpus};
use crate::error::{Error, Result};

pub const SNIPPETS_FILE: &str = "snippets.jsonl";
pub const PAIRS_FILE: &str = "pairs.jsonl";

/// Read every non-blank line of a JSONL file as `T`.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    items: impl IntoIterator<Item = &'a T>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Load the corpus stored in directory `dir`.
pub fn load_corpus(dir: &Path) -> Result<PairCorpus> {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    load_corpus_files(&dir.join(SNIPPETS_FILE), &dir.join(PAIRS_FILE), name)
}

pub fn load_corpus_files(snippets: &Path, pairs: &Path, name: String) -> Result<PairCorpus> {
    let snippets: Vec<CodeSnippet> = read_jsonl(snippets)?;
    let pairs: Vec<LabeledPair> = read_jsonl(pairs)?;
    PairCorpus::new(name, snippets, pairs)
}

/// Write `corpus` into `dir`, creating it if needed.
pub fn save_corpus(corpus: &PairCorpus, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_jsonl(&dir.join(SNIPPETS_FILE), corpus.snippets())?;
    write_jsonl(&dir.join(PAIRS_FILE), corpus.pairs())
}
