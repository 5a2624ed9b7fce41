//! Oracle backends: scripted chat fixtures and hash embeddings.

use std::collections::HashMap;
use std::sync::Arc;

use serde_json::Value;

use super::hashing::{hash_embed, DEFAULT_HASH_SEED};
use super::{
    ChatBackend, ChatRequest, Embedder, FrameRef, LexicalResponder, PromptTemplateId, ProviderError,
};
use crate::model::{Embedding, Rect};

type RuleFn = dyn Fn(&Value) -> Option<String> + Send + Sync;

struct Rule {
    template: PromptTemplateId,
    respond: Box<RuleFn>,
}

/// Answers from an exact fixture table, then from rules in insertion order,
/// then (optionally) from the [`LexicalResponder`].
#[derive(Default)]
pub struct OracleChat {
    fixtures: HashMap<String, String>,
    rules: Vec<Rule>,
    fallback: Option<Arc<LexicalResponder>>,
}

impl OracleChat {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_lexical_fallback(mut self) -> Self {
        self.fallback = Some(Arc::new(LexicalResponder::new()));
        self
    }

    /// Exact reply for exactly this request.
    pub fn fixture(mut self, req: &ChatRequest, raw: impl Into<String>) -> Self {
        self.fixtures.insert(req.cache_key(), raw.into());
        self
    }

    /// Reply computed from the payload; `None` defers to later rules.
    pub fn rule(
        mut self,
        template: PromptTemplateId,
        respond: impl Fn(&Value) -> Option<String> + Send + Sync + 'static,
    ) -> Self {
        self.rules.push(Rule {
            template,
            respond: Box::new(respond),
        });
        self
    }
}

impl ChatBackend for OracleChat {
    fn send(&self, req: &ChatRequest) -> Result<String, ProviderError> {
        if let Some(raw) = self.fixtures.get(&req.cache_key()) {
            return Ok(raw.clone());
        }
        for rule in self.rules.iter().filter(|r| r.template == req.template) {
            if let Some(raw) = (rule.respond)(&req.payload) {
                return Ok(raw);
            }
        }
        match &self.fallback {
            Some(lex) => lex.send(req),
            None => Err(ProviderError::NoFixture(req.template.to_string())),
        }
    }
}

/// Feature-hash text embeddings. Regions resolve to the embedding of the
/// stored instance crop that best overlaps the rectangle.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            seed: DEFAULT_HASH_SEED,
        }
    }

    pub fn with_seed(dim: usize, seed: u64) -> Self {
        Self { dim, seed }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl Embedder for HashEmbedder {
    fn embed_text(&self, text: &str) -> Result<Embedding, ProviderError> {
        hash_embed(text, self.dim, self.seed)
            .ok_or_else(|| ProviderError::InvalidInput(format!("no words to embed in {text:?}")))
    }

    fn embed_region(&self, frame: FrameRef<'_>, rect: &Rect) -> Result<Embedding, ProviderError> {
        let crops = &frame.frame.crops;
        // Highest IoU wins; without any overlap, the nearest crop center.
        let best = crops
            .iter()
            .map(|c| (c, c.rect.iou(rect)))
            .filter(|(_, iou)| *iou > 0.0)
            .max_by(|a, b| {
                a.1.total_cmp(&b.1)
                    .then(a.0.rect.area().total_cmp(&b.0.rect.area()))
            })
            .map(|(c, _)| c)
            .or_else(|| {
                let (cx, cy) = rect.center();
                crops.iter().min_by(|a, b| {
                    let da = dist2(a.rect.center(), (cx, cy));
                    let db = dist2(b.rect.center(), (cx, cy));
                    da.total_cmp(&db)
                })
            });
        match best {
            Some(crop) if crop.embedding.dim() == self.dim => Ok(crop.embedding.clone()),
            Some(crop) => Err(ProviderError::DimensionMismatch(
                crop.embedding.dim(),
                self.dim,
            )),
            None => self.embed_text(&format!(
                "region {} {} {:.2} {:.2} {:.2} {:.2}",
                frame.video_id,
                frame.frame.timestamp_s,
                rect.x(),
                rect.y(),
                rect.w(),
                rect.h()
            )),
        }
    }
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metadata::{synthesize_bundle, GeneratorSpec};
    use crate::providers::cosine;

    #[test]
    fn fixture_table_lookup() {
        let req = ChatRequest::new(
            PromptTemplateId::Stage4ImageQuery,
            serde_json::json!({"command": "lamp"}),
        );
        let oracle = OracleChat::new().fixture(&req, "{\"query\": \"desk lamp\"}");
        assert_eq!(oracle.send(&req).unwrap(), "{\"query\": \"desk lamp\"}");
        let other = ChatRequest::new(
            PromptTemplateId::Stage4ImageQuery,
            serde_json::json!({"command": "x"}),
        );
        assert!(matches!(
            oracle.send(&other),
            Err(ProviderError::NoFixture(_))
        ));
    }

    #[test]
    fn rules_apply_per_template_in_order() {
        let oracle = OracleChat::new()
            .rule(PromptTemplateId::Stage2Transcript, |p| {
                (p["reference"] == "skip").then(|| "[]".to_string())
            })
            .rule(PromptTemplateId::Stage2Transcript, |_| {
                Some("[{\"index\":0}]".into())
            });
        let skip = ChatRequest::new(
            PromptTemplateId::Stage2Transcript,
            serde_json::json!({"reference": "skip"}),
        );
        let any = ChatRequest::new(
            PromptTemplateId::Stage2Transcript,
            serde_json::json!({"reference": "x"}),
        );
        assert_eq!(oracle.send(&skip).unwrap(), "[]");
        assert_eq!(oracle.send(&any).unwrap(), "[{\"index\":0}]");
        let other = ChatRequest::new(PromptTemplateId::Stage2Video, serde_json::json!({}));
        assert!(oracle.send(&other).is_err());
    }

    #[test]
    fn distinct_strings_not_identical() {
        let e = HashEmbedder::new(64);
        let a = e.embed_text("the display").unwrap();
        let b = e.embed_text("the laptop").unwrap();
        assert!(cosine(&a, &b).unwrap() < 1.0);
    }

    #[test]
    fn region_resolves_to_overlapping_crop() {
        let bundle = synthesize_bundle(&GeneratorSpec::new("v", 10.0), 9);
        let frame = &bundle.frames[4];
        let e = HashEmbedder::new(bundle.embedding_dim);
        let fr = FrameRef {
            video_id: &bundle.video_id,
            frame,
        };
        for crop in &frame.crops {
            let got = e.embed_region(fr, &crop.rect).unwrap();
            // The crop itself always has IoU 1, unless another crop is identical.
            let best_iou = frame
                .crops
                .iter()
                .filter(|c| c.embedding == got)
                .map(|c| c.rect.iou(&crop.rect))
                .fold(0.0, f64::max);
            assert_eq!(best_iou, 1.0);
        }
        assert_eq!(
            e.embed_region(fr, &Rect::FULL_FRAME).unwrap().dim(),
            bundle.embedding_dim
        );
        assert_eq!(
            e.embed_region(fr, &Rect::FULL_FRAME).unwrap(),
            e.embed_region(fr, &Rect::FULL_FRAME).unwrap()
        );
    }
}
