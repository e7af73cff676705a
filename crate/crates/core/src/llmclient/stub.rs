//! Deterministic OpenAI-compatible chat endpoint for tests and offline runs.
//!
//! The stub reads the six fenced code blocks of a classification prompt
//! (clone example, non-clone example, target). With [`StubRule::Similarity`]
//! it compares token-set Jaccard similarities: the target is called a clone
//! when its similarity reaches the midpoint between the two examples'
//! similarities. [`StubRule::ExactMatch`] calls a clone only when the two
//! target snippets are byte-identical. Prompts whose FNV-1a hash is divisible
//! by 97 get an answer without a verdict line.

use std::collections::HashSet;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::oneshot;

use super::prompt::{extract_code_blocks, ChatMessage, VERDICT_CLONE, VERDICT_NOT_CLONE};
use crate::encoder::Tokenizer;
use crate::error::{Error, Result};
use crate::rng::fnv1a64;

pub const NO_VERDICT_MODULUS: u64 = 97;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StubRule {
    #[default]
    Similarity,
    ExactMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StubBehavior {
    pub rule: StubRule,
    /// Answer the first `fail_first` requests with HTTP 503.
    pub fail_first: usize,
}

#[derive(Debug, Deserialize)]
struct Request {
    #[serde(default)]
    messages: Vec<ChatMessage>,
    #[serde(default)]
    model: String,
}

struct StubState {
    behavior: StubBehavior,
    requests: AtomicUsize,
    tokenizer: Tokenizer,
}

fn jaccard(tok: &Tokenizer, a: &str, b: &str) -> f64 {
    let sa: HashSet<String> = tok.tokenize(a).into_iter().collect();
    let sb: HashSet<String> = tok.tokenize(b).into_iter().collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        1.0
    } else {
        sa.intersection(&sb).count() as f64 / union as f64
    }
}

/// The stub's reply to a prompt (pure function of the user message).
pub fn stub_reply(rule: StubRule, tokenizer: &Tokenizer, user: &str) -> String {
    let blocks = extract_code_blocks(user);
    if blocks.len() < 6 {
        return "The prompt does not contain a clone example, a non-clone example and a target pair.".into();
    }
    let (x, y, z, w, c1, c2) = (&blocks[0], &blocks[1], &blocks[2], &blocks[3], &blocks[4], &blocks[5]);
    let (clone, explanation) = match rule {
        StubRule::Similarity => {
            let sim = jaccard(tokenizer, c1, c2);
            let cut = (jaccard(tokenizer, x, y) + jaccard(tokenizer, z, w)) / 2.0;
            (
                sim >= cut,
                format!("The target snippets have token similarity {sim:.3}; the examples put the cut at {cut:.3}."),
            )
        }
        StubRule::ExactMatch => (c1 == c2, format!("The target snippets are{} identical.", if c1 == c2 { "" } else { " not" })),
    };
    if fnv1a64(user.as_bytes()).is_multiple_of(NO_VERDICT_MODULUS) {
        return format!("{explanation}\nI cannot decide.");
    }
    format!("{explanation}\n{}", if clone { VERDICT_CLONE } else { VERDICT_NOT_CLONE })
}

async fn chat(State(state): State<Arc<StubState>>, Json(req): Json<Request>) -> Response {
    let n = state.requests.fetch_add(1, Ordering::SeqCst);
    if n < state.behavior.fail_first {
        return (StatusCode::SERVICE_UNAVAILABLE, "try again").into_response();
    }
    let user = req
        .messages
        .iter()
        .rev()
        .find(|m| m.role == "user")
        .map(|m| m.content.as_str())
        .unwrap_or("");
    let content = stub_reply(state.behavior.rule, &state.tokenizer, user);
    Json(serde_json::json!({
        "id": format!("stub-{n}"),
        "object": "chat.completion",
        "model": req.model,
        "choices": [{
            "index": 0,
            "message": {"role": "assistant", "content": content},
            "finish_reason": "stop"
        }]
    }))
    .into_response()
}

fn router(behavior: StubBehavior) -> (Router, Arc<StubState>) {
    let state = Arc::new(StubState {
        behavior,
        requests: AtomicUsize::new(0),
        tokenizer: Tokenizer::default(),
    });
    let app = Router::new()
        .route("/chat/completions", post(chat))
        .route("/v1/chat/completions", post(chat))
        .with_state(state.clone());
    (app, state)
}

/// A running stub; shuts down on drop.
pub struct StubServer {
    addr: SocketAddr,
    state: Arc<StubState>,
    shutdown: Option<oneshot::Sender<()>>,
}

impl StubServer {
    /// Bind to an ephemeral localhost port on the current tokio runtime.
    pub async fn spawn(behavior: StubBehavior) -> Result<Self> {
        Self::bind("127.0.0.1:0".parse().expect("valid address"), behavior).await
    }

    pub async fn bind(addr: SocketAddr, behavior: StubBehavior) -> Result<Self> {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Error::io(addr.to_string(), e))?;
        let addr = listener.local_addr().map_err(|e| Error::io(addr.to_string(), e))?;
        let (app, state) = router(behavior);
        let (tx, rx) = oneshot::channel::<()>();
        tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
        Ok(Self {
            addr,
            state,
            shutdown: Some(tx),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Base URL for [`super::LlmConfig::endpoint`].
    pub fn endpoint(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    /// Requests received so far, failed ones included.
    pub fn requests(&self) -> usize {
        self.state.requests.load(Ordering::SeqCst)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

/// Serve the stub until the process is stopped.
pub async fn serve_forever(addr: SocketAddr, behavior: StubBehavior) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::io(addr.to_string(), e))?;
    let (app, _) = router(behavior);
    axum::serve(listener, app).await.map_err(|e| Error::io(addr.to_string(), e))
}
