use std::net::TcpListener;

use xfclone::corpus::{synthesize, CodeSnippet, Label, LabeledPair, PairCorpus, SynthConfig};
use xfclone::llmclient::*;
use xfclone::protocols::Confusion;
use xfclone::rng::fnv1a64;
use xfclone::Error;

fn client(endpoint: String, max_attempts: u32) -> LlmClient {
    LlmClient::with_api_key(
        LlmConfig {
            endpoint,
            retry: RetryPolicy {
                max_attempts,
                backoff_base_ms: 5,
            },
            timeout_secs: 10,
            ..Default::default()
        },
        None,
    )
    .unwrap()
}

fn closed_port_endpoint() -> String {
    let l = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap();
    drop(l);
    format!("http://{addr}/v1")
}

#[tokio::test]
async fn retries_transient_failures() {
    let stub = StubServer::spawn(StubBehavior {
        fail_first: 2,
        ..Default::default()
    })
    .await
    .unwrap();
    let c = client(stub.endpoint(), 3);
    let done = c.complete(&[ChatMessage::user("hello")]).await.unwrap();
    assert_eq!(done.attempts, 3);
    assert_eq!(stub.requests(), 3);
}

#[tokio::test]
async fn gives_up_after_max_attempts() {
    let stub = StubServer::spawn(StubBehavior {
        fail_first: 10,
        ..Default::default()
    })
    .await
    .unwrap();
    let err = client(stub.endpoint(), 3).complete(&[ChatMessage::user("hi")]).await.unwrap_err();
    assert!(matches!(err, Error::Transport { attempts: 3, .. }), "{err}");
    assert_eq!(err.exit_code(), 4);
    assert_eq!(stub.requests(), 3);
}

#[tokio::test]
async fn unreachable_endpoint_is_a_transport_error() {
    let err = client(closed_port_endpoint(), 2)
        .complete(&[ChatMessage::user("hi")])
        .await
        .unwrap_err();
    assert!(matches!(err, Error::Transport { attempts: 2, .. }), "{err}");
}

#[tokio::test]
async fn failed_run_keeps_partial_transcript() {
    let corpus = synthesize(&SynthConfig::new(4, 10, 0.8, 1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let exp = LlmExperiment {
        mode: SelectionMode::Unseen,
        kind: PromptKind::Contrastive,
        n: 20,
        seed: 1,
    };
    let err = run_llm_experiment(&client(closed_port_endpoint(), 1), &corpus, &exp, &path)
        .await
        .unwrap_err();
    assert!(matches!(err, Error::Transport { .. }));
    let records = read_transcript(&path).unwrap();
    assert!(!records.is_empty());
    assert!(records.last().unwrap().error.is_some());
}

/// Corpus where half the clone pairs are byte-identical and no non-clone is.
fn exact_match_corpus() -> PairCorpus {
    let mut snippets = Vec::new();
    let mut pairs = Vec::new();
    for f in 0..4 {
        let tag = format!("task{f}");
        for k in 0..12 {
            let base = format!("int {tag}_{k}(int a) {{ return a * {f} + {k}; }}");
            let (l, r) = (format!("{tag}c{k}l"), format!("{tag}c{k}r"));
            let other = if k % 2 == 0 { base.clone() } else { format!("int v{k}(int b) {{ return {k} + b * {f}; }}") };
            snippets.push(CodeSnippet { id: l.clone(), code: base, functionality: tag.clone(), language: "java".into() });
            snippets.push(CodeSnippet { id: r.clone(), code: other, functionality: tag.clone(), language: "java".into() });
            pairs.push(LabeledPair { left: l, right: r, label: Label::Clone, functionality: tag.clone() });
        }
    }
    for f in 0..4 {
        let tag = format!("task{f}");
        let next = format!("task{}", (f + 1) % 4);
        for k in 0..12 {
            pairs.push(LabeledPair {
                left: format!("{tag}c{k}l"),
                right: format!("{next}c{}r", (k + 1) % 12),
                label: Label::NonClone,
                functionality: tag.clone(),
            });
        }
    }
    PairCorpus::new("exact", snippets, pairs).unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn exact_match_stub_metrics_match_oracle() {
    let corpus = exact_match_corpus();
    let stub = StubServer::spawn(StubBehavior {
        rule: StubRule::ExactMatch,
        fail_first: 0,
    })
    .await
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let exp = LlmExperiment {
        mode: SelectionMode::Seen,
        kind: PromptKind::Baseline,
        n: 60,
        seed: 4,
    };
    let (report, records) = run_llm_experiment(&client(stub.endpoint(), 1), &corpus, &exp, &dir.path().join("t.jsonl"))
        .await
        .unwrap();

    let mut oracle = Confusion::default();
    let mut silent = 0;
    for r in &records {
        if fnv1a64(r.messages[1].content.as_bytes()).is_multiple_of(NO_VERDICT_MODULUS) {
            silent += 1;
            continue;
        }
        let (a, b) = corpus.resolve(r.pair_index);
        match (a.code == b.code, r.label) {
            (true, true) => oracle.tp += 1,
            (true, false) => oracle.fp += 1,
            (false, true) => oracle.fn_ += 1,
            (false, false) => oracle.tn += 1,
        }
    }
    assert_eq!(report.confusion, oracle);
    assert_eq!(report.unparseable, silent);
    assert_eq!(oracle.fp, 0);
    assert_eq!(report.metrics.precision, 1.0);
}

#[tokio::test(flavor = "multi_thread")]
async fn stub_runs_are_deterministic() {
    let corpus = synthesize(&SynthConfig::new(4, 20, 0.8, 2)).unwrap();
    let stub = StubServer::spawn(StubBehavior::default()).await.unwrap();
    let dir = tempfile::tempdir().unwrap();
    let exp = LlmExperiment {
        mode: SelectionMode::Seen,
        kind: PromptKind::Contrastive,
        n: 50,
        seed: 3,
    };
    let c = client(stub.endpoint(), 1);
    let (a, ra) = run_llm_experiment(&c, &corpus, &exp, &dir.path().join("a.jsonl")).await.unwrap();
    let (b, rb) = run_llm_experiment(&c, &corpus, &exp, &dir.path().join("b.jsonl")).await.unwrap();
    assert_eq!(a, b);
    let strip = |rs: &[TranscriptRecord]| rs.iter().map(|r| (r.pair_index, r.messages.clone(), r.response.clone())).collect::<Vec<_>>();
    assert_eq!(strip(&ra), strip(&rb));
}

#[tokio::test]
async fn all_unparseable_has_no_metrics() {
    let corpus = synthesize(&SynthConfig::new(3, 5, 0.8, 5)).unwrap();
    let stub = StubServer::spawn(StubBehavior::default()).await.unwrap();
    let dir = tempfile::tempdir().unwrap();
    let exp = LlmExperiment {
        mode: SelectionMode::Unseen,
        kind: PromptKind::Baseline,
        n: 10,
        seed: 5,
    };
    let (_, mut records) = run_llm_experiment(&client(stub.endpoint(), 1), &corpus, &exp, &dir.path().join("t.jsonl"))
        .await
        .unwrap();
    for r in &mut records {
        r.decision = Some(Decision::Unparseable);
    }
    assert!(matches!(summarize(&records), Err(Error::UndefinedMetrics(_))));
}

#[test]
fn verdict_parsing() {
    assert_eq!(parse_verdict("Both sort.\nVERDICT: CLONE").decision, Decision::Clone);
    assert_eq!(parse_verdict("verdict: not_clone").decision, Decision::NotClone);
    assert_eq!(parse_verdict("I am unsure.").decision, Decision::Unparseable);
}
