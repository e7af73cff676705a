use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use super::client::LlmClient;
use super::prompt::{build_prompt, ChatMessage, PromptKind, PromptSpec};
use super::select::{select_examples, spec_for, ExampleAssignment, SelectionMode};
use super::verdict::Decision;
use crate::corpus::PairCorpus;
use crate::error::{Error, Result};
use crate::protocols::{kfold_f1_compare, Alternative, Confusion, ItemOutcome, KFoldComparison, MetricsTuple};
use crate::rng;

pub const DEFAULT_EVAL_SIZE: usize = 404;
const SAMPLE_STREAM: u64 = 11;
/// Example streams are `EXAMPLE_STREAM_BASE + pair index`.
const EXAMPLE_STREAM_BASE: u64 = 1 << 32;

/// `n` distinct pair indices drawn uniformly without replacement, sorted.
pub fn sample_eval_set(corpus: &PairCorpus, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n == 0 || n > corpus.len() {
        return Err(Error::Validation(format!(
            "cannot sample {n} pairs from a corpus of {}",
            corpus.len()
        )));
    }
    let mut idx = rand::seq::index::sample(&mut rng::stream(seed, SAMPLE_STREAM), corpus.len(), n).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmExperiment {
    pub mode: SelectionMode,
    pub kind: PromptKind,
    pub n: usize,
    pub seed: u64,
}

/// One request/response exchange, persisted as a line of transcript.jsonl.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub pair_index: usize,
    pub label: bool,
    pub functionality: String,
    pub mode: SelectionMode,
    pub kind: PromptKind,
    pub seed: u64,
    /// Examples are drawn per target pair from this ChaCha8 stream of `seed`.
    pub example_stream: u64,
    pub assignment: ExampleAssignment,
    pub spec: PromptSpec,
    pub messages: Vec<ChatMessage>,
    pub response: Option<String>,
    pub decision: Option<Decision>,
    pub explanation: Option<String>,
    pub latency_ms: u64,
    pub attempts: u32,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmReport {
    pub mode: SelectionMode,
    pub kind: PromptKind,
    pub requested: usize,
    pub parseable: usize,
    pub unparseable: usize,
    pub confusion: Confusion,
    pub metrics: MetricsTuple,
}

/// Metrics over the parseable records; unparseable ones are only counted.
pub fn summarize(records: &[TranscriptRecord]) -> Result<LlmReport> {
    let first = records
        .first()
        .ok_or_else(|| Error::UndefinedMetrics("empty transcript".into()))?;
    let (mut preds, mut labels, mut unparseable) = (Vec::new(), Vec::new(), 0);
    for r in records {
        match r.decision.and_then(Decision::as_clone) {
            Some(p) => {
                preds.push(p);
                labels.push(r.label);
            }
            None => unparseable += 1,
        }
    }
    if preds.is_empty() {
        return Err(Error::UndefinedMetrics("no parseable verdicts".into()));
    }
    let confusion = Confusion::from_pairs(&preds, &labels)?;
    Ok(LlmReport {
        mode: first.mode,
        kind: first.kind,
        requested: records.len(),
        parseable: preds.len(),
        unparseable,
        metrics: confusion.metrics(),
        confusion,
    })
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptRecord>> {
    crate::corpus::read_jsonl(path)
}

/// Recompute the report of a finished run from its transcript alone.
pub fn recompute_from_transcript(path: &Path) -> Result<LlmReport> {
    summarize(&read_transcript(path)?)
}

/// Build every prompt spec up front so selection errors surface before any
/// request is sent.
fn plan_requests(corpus: &PairCorpus, exp: &LlmExperiment) -> Result<Vec<(usize, u64, ExampleAssignment, PromptSpec)>> {
    sample_eval_set(corpus, exp.n, exp.seed)?
        .into_iter()
        .map(|i| {
            let stream = EXAMPLE_STREAM_BASE + i as u64;
            let mut r = rng::stream(exp.seed, stream);
            let a = select_examples(corpus, i, exp.mode, exp.kind, &mut r)?;
            let spec = spec_for(corpus, i, &a)?;
            Ok((i, stream, a, spec))
        })
        .collect()
}

/// Classify `exp.n` sampled pairs with freshly selected examples and write
/// one transcript line per request. On a transport error the requests
/// finished so far (and the failing one) stay in the transcript.
pub async fn run_llm_experiment(
    client: &LlmClient,
    corpus: &PairCorpus,
    exp: &LlmExperiment,
    transcript: &Path,
) -> Result<(LlmReport, Vec<TranscriptRecord>)> {
    let planned = plan_requests(corpus, exp)?;
    let file = File::create(transcript).map_err(|e| Error::io(transcript, e))?;
    let mut out = BufWriter::new(file);
    let mut responses = stream::iter(planned.into_iter().map(|(i, stream, assignment, spec)| async move {
        let result = client.classify_pair(&spec).await;
        (i, stream, assignment, spec, result)
    }))
    .buffer_unordered(client.config().max_in_flight);

    let mut records = Vec::with_capacity(exp.n);
    let mut failure = None;
    while let Some((i, stream, assignment, spec, result)) = responses.next().await {
        let pair = &corpus.pairs()[i];
        let mut record = TranscriptRecord {
            pair_index: i,
            label: pair.label.is_clone(),
            functionality: pair.functionality.clone(),
            mode: exp.mode,
            kind: exp.kind,
            seed: exp.seed,
            example_stream: stream,
            assignment,
            messages: build_prompt(&spec),
            spec,
            response: None,
            decision: None,
            explanation: None,
            latency_ms: 0,
            attempts: 0,
            error: None,
        };
        match result {
            Ok(c) => {
                record.response = Some(c.verdict.raw);
                record.decision = Some(c.verdict.decision);
                record.explanation = Some(c.verdict.explanation);
                record.latency_ms = c.latency_ms;
                record.attempts = c.attempts;
            }
            Err(e) => {
                if let Error::Transport { attempts, .. } = &e {
                    record.attempts = *attempts;
                }
                record.error = Some(e.to_string());
                failure = Some(e);
            }
        }
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n").map_err(|e| Error::io(transcript, e))?;
        if failure.is_some() {
            break;
        }
        records.push(record);
    }
    drop(responses);
    out.flush().map_err(|e| Error::io(transcript, e))?;
    if let Some(e) = failure {
        return Err(e);
    }
    records.sort_by_key(|r| r.pair_index);
    Ok((summarize(&records)?, records))
}

/// Paired 10-fold F1 comparison of two transcripts over the same sampled
/// pairs. Pairs unparseable on either side are dropped from both.
pub fn compare_transcripts(
    a: &[TranscriptRecord],
    b: &[TranscriptRecord],
    k: usize,
    seed: u64,
    alternative: Alternative,
) -> Result<KFoldComparison> {
    let ids = |t: &[TranscriptRecord]| {
        let mut v: Vec<usize> = t.iter().map(|r| r.pair_index).collect();
        v.sort_unstable();
        v
    };
    if ids(a) != ids(b) {
        return Err(Error::Validation("transcripts cover different target pairs".into()));
    }
    let decided = |t: &[TranscriptRecord]| -> std::collections::BTreeMap<usize, (bool, bool)> {
        t.iter()
            .filter_map(|r| r.decision.and_then(Decision::as_clone).map(|p| (r.pair_index, (p, r.label))))
            .collect()
    };
    let (da, db) = (decided(a), decided(b));
    let both: Vec<usize> = da.keys().filter(|i| db.contains_key(i)).copied().collect();
    let outcomes = |d: &std::collections::BTreeMap<usize, (bool, bool)>| -> Vec<ItemOutcome> {
        both.iter()
            .map(|&id| ItemOutcome {
                id,
                predicted: d[&id].0,
                label: d[&id].1,
            })
            .collect()
    };
    kfold_f1_compare(&outcomes(&da), &outcomes(&db), k, seed, alternative)
}
