//! HTTP backends for an OpenAI-compatible chat-completion endpoint and
//! embedding endpoints.
//!
//! Region embeddings go to a separate endpoint that receives
//! `{"model", "video_id", "timestamp_s", "rect": {x, y, w, h}}` (normalized
//! rect) and answers `{"embedding": [..]}`; the service owning the video
//! frames crops and encodes the region.

use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::{StatusCode, Url};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ChatBackend, ChatRequest, Embedder, FrameRef, ProviderError};
use crate::model::{Embedding, Rect};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveConfig {
    pub chat_url: String,
    pub chat_model: String,
    pub embed_url: String,
    pub embed_model: String,
    #[serde(default)]
    pub region_embed_url: Option<String>,
    /// Name of the environment variable holding the bearer token.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
    #[serde(default = "default_retries")]
    pub max_transport_retries: u32,
}

fn default_key_env() -> String {
    "FRAMECUE_API_KEY".into()
}

fn default_timeout() -> u64 {
    60
}

fn default_retries() -> u32 {
    2
}

fn check_url(field: &str, raw: &str) -> Result<Url, ProviderError> {
    let url = Url::parse(raw).map_err(|e| ProviderError::Config(format!("{field}: {e}")))?;
    if !matches!(url.scheme(), "http" | "https") || url.host_str().is_none() {
        return Err(ProviderError::Config(format!(
            "{field}: expected an http(s) URL, got {raw:?}"
        )));
    }
    Ok(url)
}

impl LiveConfig {
    pub fn validate(&self) -> Result<(), ProviderError> {
        check_url("chat_url", &self.chat_url)?;
        check_url("embed_url", &self.embed_url)?;
        if let Some(u) = &self.region_embed_url {
            check_url("region_embed_url", u)?;
        }
        if self.timeout_s == 0 {
            return Err(ProviderError::Config("timeout_s must be positive".into()));
        }
        if self.chat_model.trim().is_empty() || self.embed_model.trim().is_empty() {
            return Err(ProviderError::Config(
                "model names must be non-empty".into(),
            ));
        }
        Ok(())
    }

    fn client(&self) -> Result<Client, ProviderError> {
        self.validate()?;
        Client::builder()
            .timeout(Duration::from_secs(self.timeout_s))
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))
    }

    fn api_key(&self) -> Option<String> {
        std::env::var(&self.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
    }

    fn post(&self, client: &Client, url: &str, body: &Value) -> Result<Value, ProviderError> {
        let mut attempt = 0;
        loop {
            let mut req = client.post(url).json(body);
            if let Some(key) = self.api_key() {
                req = req.bearer_auth(key);
            }
            let outcome = req.send().map_err(|e| ProviderError::Transport {
                message: e.to_string(),
                retryable: e.is_timeout() || e.is_connect(),
            });
            let err = match outcome {
                Ok(resp) if resp.status().is_success() => {
                    return resp.json().map_err(|e| ProviderError::Transport {
                        message: format!("response body: {e}"),
                        retryable: false,
                    });
                }
                Ok(resp) => {
                    let status = resp.status();
                    let text = resp.text().unwrap_or_default();
                    ProviderError::Transport {
                        message: format!(
                            "{status}: {}",
                            text.chars().take(300).collect::<String>()
                        ),
                        retryable: status == StatusCode::TOO_MANY_REQUESTS
                            || status.is_server_error(),
                    }
                }
                Err(e) => e,
            };
            if !err.is_retryable() || attempt >= self.max_transport_retries {
                return Err(err);
            }
            attempt += 1;
            std::thread::sleep(Duration::from_millis(500 * 2u64.pow(attempt)));
        }
    }
}

pub struct LiveChat {
    config: LiveConfig,
    client: Client,
}

impl LiveChat {
    pub fn new(config: LiveConfig) -> Result<Self, ProviderError> {
        let client = config.client()?;
        Ok(Self { config, client })
    }
}

impl ChatBackend for LiveChat {
    fn send(&self, req: &ChatRequest) -> Result<String, ProviderError> {
        let body = serde_json::json!({
            "model": self.config.chat_model,
            "temperature": req.decoding_temperature,
            "messages": [
                {"role": "system", "content": req.template.instructions()},
                {"role": "user", "content": serde_json::to_string_pretty(&req.payload).expect("payload serializes")},
            ],
        });
        let resp = self
            .config
            .post(&self.client, &self.config.chat_url, &body)?;
        resp.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Transport {
                message: "chat response lacks choices[0].message.content".into(),
                retryable: false,
            })
    }
}

pub struct LiveEmbedder {
    config: LiveConfig,
    client: Client,
}

impl LiveEmbedder {
    pub fn new(config: LiveConfig) -> Result<Self, ProviderError> {
        let client = config.client()?;
        Ok(Self { config, client })
    }
}

fn parse_embedding(v: Option<&Value>) -> Result<Embedding, ProviderError> {
    let v = v.ok_or_else(|| ProviderError::Transport {
        message: "response lacks an embedding".into(),
        retryable: false,
    })?;
    serde_json::from_value(v.clone()).map_err(|e| ProviderError::Transport {
        message: format!("bad embedding: {e}"),
        retryable: false,
    })
}

impl Embedder for LiveEmbedder {
    fn embed_text(&self, text: &str) -> Result<Embedding, ProviderError> {
        let body = serde_json::json!({ "model": self.config.embed_model, "input": text });
        let resp = self
            .config
            .post(&self.client, &self.config.embed_url, &body)?;
        parse_embedding(resp.pointer("/data/0/embedding"))
    }

    fn embed_region(&self, frame: FrameRef<'_>, rect: &Rect) -> Result<Embedding, ProviderError> {
        let url =
            self.config.region_embed_url.as_deref().ok_or_else(|| {
                ProviderError::Config("region_embed_url is not configured".into())
            })?;
        let mut body = frame.request_value(rect);
        body["model"] = Value::String(self.config.embed_model.clone());
        let resp = self.config.post(&self.client, url, &body)?;
        parse_embedding(resp.get("embedding"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> LiveConfig {
        LiveConfig {
            chat_url: "https://llm.example/v1/chat/completions".into(),
            chat_model: "gpt-4-0613".into(),
            embed_url: "https://llm.example/v1/embeddings".into(),
            embed_model: "text-embed".into(),
            region_embed_url: None,
            api_key_env: default_key_env(),
            timeout_s: 30,
            max_transport_retries: 0,
        }
    }

    #[test]
    fn validates_urls() {
        assert!(cfg().validate().is_ok());
        let bad = LiveConfig {
            chat_url: "not a url".into(),
            ..cfg()
        };
        assert!(
            matches!(bad.validate(), Err(ProviderError::Config(m)) if m.starts_with("chat_url"))
        );
        let ftp = LiveConfig {
            embed_url: "ftp://x/y".into(),
            ..cfg()
        };
        assert!(ftp.validate().is_err());
    }

    #[test]
    fn unreachable_endpoint_is_transport_error() {
        let c = LiveConfig {
            chat_url: "http://127.0.0.1:9/chat".into(),
            timeout_s: 2,
            ..cfg()
        };
        let chat = LiveChat::new(c).unwrap();
        let req = ChatRequest::new(
            super::super::PromptTemplateId::Stage1Parse,
            serde_json::json!({}),
        );
        assert!(matches!(
            chat.send(&req),
            Err(ProviderError::Transport { .. })
        ));
    }
}
