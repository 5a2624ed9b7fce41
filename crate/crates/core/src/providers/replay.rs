//! Record/replay cache.
//!
//! File format: JSON Lines. The first line is a header
//! `{"format":"framecue-replay-cache","version":1}`; every following line is
//! one [`CacheRecord`]. Records are only ever appended. On load, a later
//! record with the same key replaces an earlier one.

use std::collections::HashMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{cache_key, ChatBackend, ChatRequest, Embedder, FrameRef, ProviderError};
use crate::model::{Embedding, Rect};

pub const CACHE_FORMAT: &str = "framecue-replay-cache";
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Chat,
    EmbedText,
    EmbedRegion,
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordKind::Chat => "chat",
            RecordKind::EmbedText => "embed_text",
            RecordKind::EmbedRegion => "embed_region",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub kind: RecordKind,
    /// The request as hashed, kept for inspection.
    pub request: Value,
    /// Raw model text for chat records, an array of numbers for embeddings.
    pub response: Value,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

/// Shared cache with a single appending writer.
#[derive(Debug, Default)]
pub struct ReplayCache {
    records: RwLock<HashMap<String, CacheRecord>>,
    writer: Mutex<Option<File>>,
    path: Option<PathBuf>,
}

impl ReplayCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    fn read_records(path: &Path) -> Result<HashMap<String, CacheRecord>, ProviderError> {
        let file = File::open(path)
            .map_err(|e| ProviderError::Cache(format!("{}: {e}", path.display())))?;
        let mut lines = BufReader::new(file).lines();
        let header_line = match lines.next() {
            Some(line) => line.map_err(|e| ProviderError::Cache(e.to_string()))?,
            None => return Ok(HashMap::new()),
        };
        let header: Header = serde_json::from_str(&header_line)
            .map_err(|e| ProviderError::Cache(format!("bad header: {e}")))?;
        if header.format != CACHE_FORMAT || header.version != CACHE_VERSION {
            return Err(ProviderError::Cache(format!(
                "unsupported cache {} v{} (expected {CACHE_FORMAT} v{CACHE_VERSION})",
                header.format, header.version
            )));
        }
        let mut records = HashMap::new();
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| ProviderError::Cache(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CacheRecord = serde_json::from_str(&line)
                .map_err(|e| ProviderError::Cache(format!("line {}: {e}", n + 2)))?;
            records.insert(rec.key.clone(), rec);
        }
        Ok(records)
    }

    pub fn open_read_only(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let path = path.as_ref();
        Ok(Self {
            records: RwLock::new(Self::read_records(path)?),
            writer: Mutex::new(None),
            path: Some(path.to_path_buf()),
        })
    }

    /// Opens (creating if needed) a cache that appends new records.
    pub fn open_append(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let path = path.as_ref();
        let exists = path.exists()
            && std::fs::metadata(path)
                .map(|m| m.len() > 0)
                .unwrap_or(false);
        let records = if exists {
            Self::read_records(path)?
        } else {
            HashMap::new()
        };
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| ProviderError::Cache(format!("{}: {e}", path.display())))?;
        if !exists {
            let header = serde_json::to_string(&Header {
                format: CACHE_FORMAT.into(),
                version: CACHE_VERSION,
            })
            .expect("header serializes");
            writeln!(file, "{header}").map_err(|e| ProviderError::Cache(e.to_string()))?;
        }
        Ok(Self {
            records: RwLock::new(records),
            writer: Mutex::new(Some(file)),
            path: Some(path.to_path_buf()),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<CacheRecord> {
        self.records.read().unwrap().get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.records.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All records sorted by `(kind, key)`.
    pub fn records(&self) -> Vec<CacheRecord> {
        let mut all: Vec<CacheRecord> = self.records.read().unwrap().values().cloned().collect();
        all.sort_by(|a, b| (a.kind, &a.key).cmp(&(b.kind, &b.key)));
        all
    }

    pub fn insert(&self, record: CacheRecord) -> Result<(), ProviderError> {
        let mut writer = self.writer.lock().unwrap();
        if let Some(file) = writer.as_mut() {
            let line = serde_json::to_string(&record).expect("record serializes");
            writeln!(file, "{line}").map_err(|e| ProviderError::Cache(e.to_string()))?;
            file.flush()
                .map_err(|e| ProviderError::Cache(e.to_string()))?;
        }
        self.records
            .write()
            .unwrap()
            .insert(record.key.clone(), record);
        Ok(())
    }
}

fn chat_request_value(req: &ChatRequest) -> Value {
    serde_json::json!({ "template": req.template, "payload": req.payload })
}

fn text_request_value(text: &str) -> Value {
    serde_json::json!({ "text": text })
}

fn embedding_from(record: &CacheRecord) -> Result<Embedding, ProviderError> {
    serde_json::from_value(record.response.clone()).map_err(|e| {
        ProviderError::Cache(format!("record {} is not an embedding: {e}", record.key))
    })
}

pub struct ReplayChat {
    cache: Arc<ReplayCache>,
}

impl ReplayChat {
    pub fn new(cache: Arc<ReplayCache>) -> Self {
        Self { cache }
    }
}

impl ChatBackend for ReplayChat {
    fn send(&self, req: &ChatRequest) -> Result<String, ProviderError> {
        let key = req.cache_key();
        let rec = self.cache.get(&key).ok_or(ProviderError::ReplayMiss {
            kind: RecordKind::Chat,
            key: key.clone(),
        })?;
        rec.response.as_str().map(str::to_string).ok_or_else(|| {
            ProviderError::Cache(format!("chat record {key} has a non-string response"))
        })
    }
}

pub struct ReplayEmbedder {
    cache: Arc<ReplayCache>,
}

impl ReplayEmbedder {
    pub fn new(cache: Arc<ReplayCache>) -> Self {
        Self { cache }
    }

    fn lookup(&self, kind: RecordKind, request: &Value) -> Result<Embedding, ProviderError> {
        let key = cache_key(kind, request);
        let rec = self
            .cache
            .get(&key)
            .ok_or(ProviderError::ReplayMiss { kind, key })?;
        embedding_from(&rec)
    }
}

impl Embedder for ReplayEmbedder {
    fn embed_text(&self, text: &str) -> Result<Embedding, ProviderError> {
        self.lookup(RecordKind::EmbedText, &text_request_value(text))
    }

    fn embed_region(&self, frame: FrameRef<'_>, rect: &Rect) -> Result<Embedding, ProviderError> {
        self.lookup(RecordKind::EmbedRegion, &frame.request_value(rect))
    }
}

/// Serves from the cache when possible and records whatever `inner` answers.
pub struct RecordingChat {
    inner: Arc<dyn ChatBackend>,
    cache: Arc<ReplayCache>,
}

impl RecordingChat {
    pub fn new(inner: Arc<dyn ChatBackend>, cache: Arc<ReplayCache>) -> Self {
        Self { inner, cache }
    }
}

impl ChatBackend for RecordingChat {
    fn send(&self, req: &ChatRequest) -> Result<String, ProviderError> {
        let key = req.cache_key();
        if let Some(rec) = self.cache.get(&key) {
            if let Some(s) = rec.response.as_str() {
                return Ok(s.to_string());
            }
        }
        let raw = self.inner.send(req)?;
        self.cache.insert(CacheRecord {
            key,
            kind: RecordKind::Chat,
            request: chat_request_value(req),
            response: Value::String(raw.clone()),
        })?;
        Ok(raw)
    }
}

pub struct RecordingEmbedder {
    inner: Arc<dyn Embedder>,
    cache: Arc<ReplayCache>,
}

impl RecordingEmbedder {
    pub fn new(inner: Arc<dyn Embedder>, cache: Arc<ReplayCache>) -> Self {
        Self { inner, cache }
    }

    fn through(
        &self,
        kind: RecordKind,
        request: Value,
        compute: impl FnOnce() -> Result<Embedding, ProviderError>,
    ) -> Result<Embedding, ProviderError> {
        let key = cache_key(kind, &request);
        if let Some(rec) = self.cache.get(&key) {
            return embedding_from(&rec);
        }
        let e = compute()?;
        self.cache.insert(CacheRecord {
            key,
            kind,
            request,
            response: serde_json::to_value(&e).expect("embedding serializes"),
        })?;
        Ok(e)
    }
}

impl Embedder for RecordingEmbedder {
    fn embed_text(&self, text: &str) -> Result<Embedding, ProviderError> {
        self.through(RecordKind::EmbedText, text_request_value(text), || {
            self.inner.embed_text(text)
        })
    }

    fn embed_region(&self, frame: FrameRef<'_>, rect: &Rect) -> Result<Embedding, ProviderError> {
        self.through(RecordKind::EmbedRegion, frame.request_value(rect), || {
            self.inner.embed_region(frame, rect)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{HashEmbedder, PromptTemplateId};

    struct Echo;

    impl ChatBackend for Echo {
        fn send(&self, req: &ChatRequest) -> Result<String, ProviderError> {
            Ok(format!("{{\"echo\": {}}}", req.payload))
        }
    }

    #[test]
    fn record_then_replay_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let req = ChatRequest::new(
            PromptTemplateId::Stage4ImageQuery,
            serde_json::json!({"command": "lamp"}),
        );

        let recorded = {
            let cache = Arc::new(ReplayCache::open_append(&path).unwrap());
            let rec = RecordingChat::new(Arc::new(Echo), cache.clone());
            let emb = RecordingEmbedder::new(Arc::new(HashEmbedder::new(16)), cache);
            emb.embed_text("lamp").unwrap();
            rec.send(&req).unwrap()
        };

        let cache = Arc::new(ReplayCache::open_read_only(&path).unwrap());
        assert_eq!(cache.len(), 2);
        let replay = ReplayChat::new(cache.clone());
        assert_eq!(replay.send(&req).unwrap(), recorded);
        assert_eq!(replay.send(&req).unwrap(), recorded);

        let emb = ReplayEmbedder::new(cache);
        assert_eq!(
            emb.embed_text("lamp").unwrap(),
            HashEmbedder::new(16).embed_text("lamp").unwrap()
        );
    }

    #[test]
    fn miss_is_reported() {
        let replay = ReplayChat::new(Arc::new(ReplayCache::in_memory()));
        let req = ChatRequest::new(
            PromptTemplateId::Stage1Parse,
            serde_json::json!({"command": "x"}),
        );
        assert!(matches!(
            replay.send(&req),
            Err(ProviderError::ReplayMiss {
                kind: RecordKind::Chat,
                ..
            })
        ));
        let emb = ReplayEmbedder::new(Arc::new(ReplayCache::in_memory()));
        assert!(matches!(
            emb.embed_text("x"),
            Err(ProviderError::ReplayMiss {
                kind: RecordKind::EmbedText,
                ..
            })
        ));
    }

    #[test]
    fn reopening_appends_without_second_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        for text in ["a", "b"] {
            let cache = Arc::new(ReplayCache::open_append(&path).unwrap());
            RecordingEmbedder::new(Arc::new(HashEmbedder::new(4)), cache)
                .embed_text(text)
                .unwrap();
        }
        let body = std::fs::read_to_string(&path).unwrap();
        assert_eq!(body.lines().count(), 3);
        assert_eq!(body.matches(CACHE_FORMAT).count(), 1);
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(&path, "{\"format\":\"other\",\"version\":1}\n").unwrap();
        assert!(matches!(
            ReplayCache::open_read_only(&path),
            Err(ProviderError::Cache(_))
        ));
    }
}
