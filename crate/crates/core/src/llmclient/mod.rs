//! In-context clone classification against OpenAI-compatible chat
//! endpoints.

mod client;
mod experiment;
mod prompt;
mod select;
mod stub;
mod verdict;

pub use client::{Classified, Completion, LlmClient, LlmConfig, RetryPolicy, API_KEY_ENV};
pub use experiment::{
    compare_transcripts, read_transcript, recompute_from_transcript, run_llm_experiment, sample_eval_set, summarize,
    LlmExperiment, LlmReport, TranscriptRecord, DEFAULT_EVAL_SIZE,
};
pub use prompt::{
    build_prompt, extract_code_blocks, ChatMessage, PromptKind, PromptSpec, CLONE_DEFINITION, VERDICT_CLONE,
    VERDICT_NOT_CLONE,
};
pub use select::{select_examples, spec_for, ExampleAssignment, SelectionMode};
pub use stub::{serve_forever, stub_reply, StubBehavior, StubRule, StubServer, NO_VERDICT_MODULUS};
pub use verdict::{parse_verdict, Decision, Verdict};
