//! Access to the language-model and embedding services.
//!
//! Three interchangeable backends sit behind [`ChatBackend`] and [`Embedder`]:
//!
//! * **live**: HTTP calls to a chat-completion and an embedding endpoint,
//! * **replay**: answers from a recorded cache file, a pure function of the request,
//! * **oracle**: scripted fixtures and a rule-based responder, also pure.
//!
//! [`Providers`] bundles one of each and adds what every stage needs on top:
//! output parsing against the template schema with a bounded repair loop,
//! and unit-normalization of embeddings.

pub mod hashing;
pub(crate) mod lexical;
mod live;
mod oracle;
mod replay;
pub mod templates;

use std::path::PathBuf;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::metadata::FrameMetadata;
use crate::model::{Embedding, Rect};

pub use lexical::LexicalResponder;
pub use live::{LiveChat, LiveConfig, LiveEmbedder};
pub use oracle::{HashEmbedder, OracleChat};
pub use replay::{
    CacheRecord, RecordKind, RecordingChat, RecordingEmbedder, ReplayCache, ReplayChat,
    ReplayEmbedder, CACHE_FORMAT, CACHE_VERSION,
};
pub use templates::PromptTemplateId;

/// Re-prompts allowed after a response fails to parse.
pub const DEFAULT_MAX_REPAIRS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderMode {
    Live,
    Replay,
    Oracle,
}

#[derive(Debug, Clone, Error)]
pub enum ProviderError {
    #[error("transport failure: {message}")]
    Transport { message: String, retryable: bool },
    #[error("malformed {template} response: {reason}")]
    MalformedResponse {
        template: PromptTemplateId,
        reason: String,
        raw_text: String,
    },
    #[error("replay cache has no {kind} record for key {key}")]
    ReplayMiss { kind: RecordKind, key: String },
    #[error("oracle has no fixture for {0}")]
    NoFixture(String),
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid provider input: {0}")]
    InvalidInput(String),
    #[error("replay cache: {0}")]
    Cache(String),
    #[error("provider configuration: {0}")]
    Config(String),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            ProviderError::Transport {
                retryable: true,
                ..
            }
        )
    }

    pub fn is_malformed(&self) -> bool {
        matches!(self, ProviderError::MalformedResponse { .. })
    }
}

/// A request for one of the prompt templates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub template: PromptTemplateId,
    pub payload: Value,
    pub decoding_temperature: f64,
}

impl ChatRequest {
    pub fn new(template: PromptTemplateId, payload: impl Serialize) -> Self {
        Self {
            template,
            payload: serde_json::to_value(payload).expect("payload serializes"),
            decoding_temperature: 0.0,
        }
    }

    /// Content hash of `(template, payload)` used as the replay key.
    pub fn cache_key(&self) -> String {
        cache_key(
            RecordKind::Chat,
            &serde_json::json!({
                "template": self.template,
                "payload": self.payload,
            }),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub payload: Value,
    pub raw_text: String,
}

/// Hex SHA-256 over the canonical JSON of `(kind, request)`.
pub fn cache_key(kind: RecordKind, request: &Value) -> String {
    let mut text = String::new();
    write_canonical(
        &serde_json::json!({ "kind": kind, "request": request }),
        &mut text,
    );
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// JSON with object keys sorted at every level.
pub fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

/// Produces the raw model text for a request.
pub trait ChatBackend: Send + Sync {
    fn send(&self, req: &ChatRequest) -> Result<String, ProviderError>;
}

/// A sampled frame together with the video it belongs to.
#[derive(Debug, Clone, Copy)]
pub struct FrameRef<'a> {
    pub video_id: &'a str,
    pub frame: &'a FrameMetadata,
}

impl FrameRef<'_> {
    pub fn request_value(&self, rect: &Rect) -> Value {
        serde_json::json!({
            "video_id": self.video_id,
            "timestamp_s": self.frame.timestamp_s,
            "rect": rect,
        })
    }
}

/// Text and image-region encoder sharing one embedding space.
pub trait Embedder: Send + Sync {
    fn embed_text(&self, text: &str) -> Result<Embedding, ProviderError>;
    fn embed_region(&self, frame: FrameRef<'_>, rect: &Rect) -> Result<Embedding, ProviderError>;
}

/// Standard cosine similarity.
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64, ProviderError> {
    if a.dim() != b.dim() {
        return Err(ProviderError::DimensionMismatch(a.dim(), b.dim()));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(ProviderError::InvalidInput(
            "cosine of a zero vector".into(),
        ));
    }
    let dot: f64 = a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Pulls the JSON document out of a model reply, tolerating code fences and
/// prose around it.
pub fn extract_json(raw: &str) -> Result<Value, String> {
    let trimmed = raw.trim();
    if let Ok(v) = serde_json::from_str(trimmed) {
        return Ok(v);
    }
    let unfenced = trimmed
        .strip_prefix("```json")
        .or_else(|| trimmed.strip_prefix("```"))
        .and_then(|s| s.trim_end().strip_suffix("```"))
        .map(str::trim);
    if let Some(inner) = unfenced {
        if let Ok(v) = serde_json::from_str(inner) {
            return Ok(v);
        }
    }
    let start = trimmed
        .find(['{', '['])
        .ok_or("no JSON object or array in response")?;
    let open = trimmed.as_bytes()[start];
    let close = if open == b'{' { '}' } else { ']' };
    let end = trimmed
        .rfind(close)
        .ok_or("unterminated JSON in response")?;
    if end <= start {
        return Err("unterminated JSON in response".into());
    }
    serde_json::from_str(&trimmed[start..=end]).map_err(|e| format!("invalid JSON: {e}"))
}

/// The provider pair handed to every pipeline stage.
#[derive(Clone)]
pub struct Providers {
    chat: Arc<dyn ChatBackend>,
    embedder: Arc<dyn Embedder>,
    max_repairs: u32,
    mode: ProviderMode,
}

impl std::fmt::Debug for Providers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Providers")
            .field("mode", &self.mode)
            .field("max_repairs", &self.max_repairs)
            .finish()
    }
}

impl Providers {
    pub fn new(
        mode: ProviderMode,
        chat: Arc<dyn ChatBackend>,
        embedder: Arc<dyn Embedder>,
    ) -> Self {
        Self {
            chat,
            embedder,
            max_repairs: DEFAULT_MAX_REPAIRS,
            mode,
        }
    }

    /// Rule-based responder and hash embeddings; no files, no network.
    pub fn offline(embedding_dim: usize) -> Self {
        Self::new(
            ProviderMode::Oracle,
            Arc::new(OracleChat::new().with_lexical_fallback()),
            Arc::new(HashEmbedder::new(embedding_dim)),
        )
    }

    pub fn with_max_repairs(mut self, n: u32) -> Self {
        self.max_repairs = n;
        self
    }

    pub fn mode(&self) -> ProviderMode {
        self.mode
    }

    pub fn chat_backend(&self) -> &Arc<dyn ChatBackend> {
        &self.chat
    }

    pub fn embedder(&self) -> &Arc<dyn Embedder> {
        &self.embedder
    }

    /// Sends `req` and parses the reply as `T`, then runs `check`. A reply
    /// that fails either step is sent back with the error appended, up to
    /// `max_repairs` times, before surfacing `MalformedResponse`.
    pub fn complete_validated<T, F>(
        &self,
        req: &ChatRequest,
        check: F,
    ) -> Result<(T, ChatResponse), ProviderError>
    where
        T: DeserializeOwned,
        F: Fn(&T) -> Result<(), String>,
    {
        let mut current = req.clone();
        let mut last_reason = String::new();
        let mut last_raw = String::new();
        for attempt in 0..=self.max_repairs {
            let raw = self.chat.send(&current)?;
            let outcome = extract_json(&raw).and_then(|payload| {
                let typed: T = serde_json::from_value(payload.clone())
                    .map_err(|e| format!("schema mismatch: {e}"))?;
                check(&typed)?;
                Ok((typed, payload))
            });
            match outcome {
                Ok((typed, payload)) => {
                    return Ok((
                        typed,
                        ChatResponse {
                            payload,
                            raw_text: raw,
                        },
                    ))
                }
                Err(reason) => {
                    tracing::debug!(template = %req.template, attempt, %reason, "model output rejected");
                    current = repair_request(req, &raw, &reason, attempt + 1);
                    last_reason = reason;
                    last_raw = raw;
                }
            }
        }
        Err(ProviderError::MalformedResponse {
            template: req.template,
            reason: last_reason,
            raw_text: last_raw,
        })
    }

    /// [`Providers::complete_validated`] without a semantic check.
    pub fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.complete_validated::<Value, _>(req, |_| Ok(()))
            .map(|(_, resp)| resp)
    }

    /// Unit-normalized text embedding.
    pub fn embed_text(&self, text: &str) -> Result<Embedding, ProviderError> {
        if text.trim().is_empty() {
            return Err(ProviderError::InvalidInput(
                "cannot embed empty text".into(),
            ));
        }
        let e = self.embedder.embed_text(text)?;
        e.normalized()
            .map_err(|e| ProviderError::InvalidInput(e.to_string()))
    }

    /// Unit-normalized embedding of the frame region under `rect`.
    pub fn embed_region(
        &self,
        frame: FrameRef<'_>,
        rect: &Rect,
    ) -> Result<Embedding, ProviderError> {
        let e = self.embedder.embed_region(frame, rect)?;
        e.normalized()
            .map_err(|e| ProviderError::InvalidInput(e.to_string()))
    }
}

fn repair_request(original: &ChatRequest, raw: &str, reason: &str, attempt: u32) -> ChatRequest {
    let mut payload = original.payload.clone();
    if let Value::Object(map) = &mut payload {
        map.insert(
            "repair".into(),
            serde_json::json!({
                "attempt": attempt,
                "previous_output": raw,
                "error": reason,
                "instruction": "The previous output could not be used. Reply again with only valid JSON in the required format.",
            }),
        );
    }
    ChatRequest {
        template: original.template,
        payload,
        decoding_temperature: original.decoding_temperature,
    }
}

/// How to construct [`Providers`] from configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub mode: ProviderMode,
    #[serde(default)]
    pub replay_cache: Option<PathBuf>,
    #[serde(default)]
    pub live: Option<LiveConfig>,
    #[serde(default = "default_dim")]
    pub embedding_dim: usize,
    #[serde(default = "default_repairs")]
    pub max_repairs: u32,
}

fn default_dim() -> usize {
    64
}

fn default_repairs() -> u32 {
    DEFAULT_MAX_REPAIRS
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), ProviderError> {
        match self.mode {
            ProviderMode::Replay if self.replay_cache.is_none() => Err(ProviderError::Config(
                "replay mode needs a replay_cache path".into(),
            )),
            ProviderMode::Live => match &self.live {
                None => Err(ProviderError::Config(
                    "live mode needs a [provider.live] section".into(),
                )),
                Some(live) => live.validate(),
            },
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<Providers, ProviderError> {
        self.validate()?;
        let providers = match self.mode {
            ProviderMode::Oracle => Providers::offline(self.embedding_dim),
            ProviderMode::Replay => {
                let cache = Arc::new(ReplayCache::open_read_only(
                    self.replay_cache.as_ref().unwrap(),
                )?);
                Providers::new(
                    ProviderMode::Replay,
                    Arc::new(ReplayChat::new(cache.clone())),
                    Arc::new(ReplayEmbedder::new(cache)),
                )
            }
            ProviderMode::Live => {
                let live = self.live.clone().unwrap();
                Providers::new(
                    ProviderMode::Live,
                    Arc::new(LiveChat::new(live.clone())?),
                    Arc::new(LiveEmbedder::new(live)?),
                )
            }
        };
        Ok(providers.with_max_repairs(self.max_repairs))
    }
}
