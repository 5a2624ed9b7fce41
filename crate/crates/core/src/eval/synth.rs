//! Synthetic datasets with a matching ground-truth oracle.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::metadata::MetadataBundle;
use crate::model::{EditOperation, Rect, SpatialRefCategory, TemporalRefCategory, TimeInterval};
use crate::parser::EditCommand;
use crate::providers::{HashEmbedder, OracleChat, PromptTemplateId, ProviderMode, Providers};
use crate::spatial::representative_frame;
use crate::timecode::format_timecode;

use super::dataset::{GroundTruthEntry, GtParse, GtSegment};

/// A dataset plus the category of each spatial text, which the dataset
/// format does not record.
#[derive(Debug, Clone)]
pub struct SyntheticSuite {
    pub entries: Vec<GroundTruthEntry>,
    spatial_categories: BTreeMap<String, Vec<SpatialRefCategory>>,
    frame: (u32, u32),
}

fn grid_rect(rng: &mut ChaCha8Rng) -> Rect {
    let w = rng.gen_range(2..=8);
    let h = rng.gen_range(2..=8);
    let x = rng.gen_range(0..=16 - w);
    let y = rng.gen_range(0..=16 - h);
    Rect::new(
        x as f64 / 16.0,
        y as f64 / 16.0,
        w as f64 / 16.0,
        h as f64 / 16.0,
    )
    .expect("grid rect")
}

/// `n` entries cycling through positional, transcript and video
/// references over `bundle`. Pure function of `(bundle, n, seed)`.
pub fn synthesize_suite(bundle: &MetadataBundle, n: usize, seed: u64) -> SyntheticSuite {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    let mut spatial_categories = BTreeMap::new();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &bundle.transcript {
        *counts.entry(s.text.as_str()).or_default() += 1;
    }
    let sentences: Vec<&str> = counts
        .iter()
        .filter(|(_, &c)| c <= 10)
        .map(|(t, _)| *t)
        .collect();
    let actions: BTreeSet<&str> = bundle
        .clips
        .iter()
        .map(|c| c.action_label.as_str())
        .collect();
    let actions: Vec<&str> = actions.into_iter().collect();
    for i in 0..n {
        let id = format!("{}-{:03}", bundle.video_id, i + 1);
        let id = &id;
        let mut attempt = 0;
        let (entry, cats) = loop {
            let (entry, cats) = match i % 3 {
                0 => {
                    let slots = ((bundle.duration_s - 10.0) / 5.0).floor().max(0.0) as usize;
                    let a = 5.0 * rng.gen_range(0..=slots) as f64;
                    let iv = TimeInterval::new(a, (a + 10.0).min(bundle.duration_s))
                        .expect("inside video");
                    let frame = representative_frame(&iv, bundle).expect("frames");
                    let crop = frame.crops.choose(&mut rng).expect("crops");
                    let label = crop.label.clone().expect("synthetic crops are labelled");
                    let when = format!(
                        "from {} to {}",
                        format_timecode(iv.start_s() as u32),
                        format_timecode(iv.end_s() as u32)
                    );
                    let text = format!("blur the {label} {when}");
                    let e = GroundTruthEntry {
                        id: id.clone(),
                        video_id: bundle.video_id.clone(),
                        temporal_categories: vec![TemporalRefCategory::Position],
                        command: EditCommand::new(text),
                        gt_parse: GtParse {
                            temporal_texts: vec![when],
                            spatial_texts: vec![label],
                            operation_texts: vec!["blur".into()],
                            parameter_texts: vec![],
                        },
                        gt_segments: vec![GtSegment {
                            interval: iv,
                            rect: crop.rect,
                        }],
                        gt_operations: [EditOperation::Blur].into(),
                    };
                    (e, vec![SpatialRefCategory::VisualDependent])
                }
                1 => {
                    let sentence = *sentences.choose(&mut rng).expect("transcript");
                    let segs: Vec<TimeInterval> = bundle
                        .transcript
                        .iter()
                        .filter(|s| s.text == sentence)
                        .map(|s| s.interval)
                        .collect();
                    let sketch = grid_rect(&mut rng);
                    let text = format!("add text when the speaker says {sentence}");
                    let e = GroundTruthEntry {
                        id: id.clone(),
                        video_id: bundle.video_id.clone(),
                        temporal_categories: vec![TemporalRefCategory::Transcript],
                        command: EditCommand::new(text).with_sketch(sketch, segs[0].start_s()),
                        gt_parse: GtParse {
                            temporal_texts: vec![sentence.to_string()],
                            spatial_texts: vec![],
                            operation_texts: vec!["add text".into()],
                            parameter_texts: vec![],
                        },
                        gt_segments: segs
                            .iter()
                            .map(|&interval| GtSegment {
                                interval,
                                rect: sketch,
                            })
                            .collect(),
                        gt_operations: [EditOperation::Text].into(),
                    };
                    (e, vec![])
                }
                _ => {
                    let action = *actions.choose(&mut rng).expect("clips");
                    let segs: Vec<TimeInterval> = bundle
                        .clips
                        .iter()
                        .filter(|c| c.action_label == action)
                        .map(|c| c.interval)
                        .collect();
                    let rect = grid_rect(&mut rng);
                    let where_ = "the marked area of the frame".to_string();
                    let when = format!("the person is {action}");
                    let text = format!("zoom in on {where_} when {when}");
                    let e = GroundTruthEntry {
                        id: id.clone(),
                        video_id: bundle.video_id.clone(),
                        temporal_categories: vec![TemporalRefCategory::Video],
                        command: EditCommand::new(text),
                        gt_parse: GtParse {
                            temporal_texts: vec![when],
                            spatial_texts: vec![where_],
                            operation_texts: vec!["zoom in".into()],
                            parameter_texts: vec![],
                        },
                        gt_segments: segs
                            .iter()
                            .map(|&interval| GtSegment { interval, rect })
                            .collect(),
                        gt_operations: [EditOperation::Zoom].into(),
                    };
                    (e, vec![SpatialRefCategory::Independent])
                }
            };
            // The oracle keys on command text, so texts must be unique.
            attempt += 1;
            if attempt >= 32 || !spatial_categories.contains_key(&entry.command.text) {
                break (entry, cats);
            }
        };
        spatial_categories.insert(entry.command.text.clone(), cats);
        entries.push(entry);
    }
    SyntheticSuite {
        entries,
        spatial_categories,
        frame: (bundle.frame_dims.width_px, bundle.frame_dims.height_px),
    }
}

fn category_str<T: serde::Serialize>(c: T) -> Value {
    serde_json::to_value(c).expect("category serializes")
}

impl SyntheticSuite {
    /// Chat backend that answers every prompt with the ground truth.
    pub fn oracle_chat(&self) -> OracleChat {
        let by_command: Arc<BTreeMap<String, (GroundTruthEntry, Vec<SpatialRefCategory>)>> =
            Arc::new(
                self.entries
                    .iter()
                    .map(|e| {
                        let cats = self
                            .spatial_categories
                            .get(&e.command.text)
                            .cloned()
                            .unwrap_or_default();
                        (e.command.text.clone(), (e.clone(), cats))
                    })
                    .collect(),
            );
        let lookup = |m: &BTreeMap<String, (GroundTruthEntry, Vec<SpatialRefCategory>)>,
                      p: &Value| {
            p.get("command")
                .and_then(Value::as_str)
                .and_then(|c| m.get(c))
                .cloned()
        };
        let (fw, fh) = (self.frame.0 as f64, self.frame.1 as f64);

        let m = by_command.clone();
        let chat = OracleChat::new().rule(PromptTemplateId::Stage1Parse, move |p| {
            let (e, cats) = lookup(&m, p)?;
            let g = &e.gt_parse;
            let temporal: Vec<Value> = g
                .temporal_texts
                .iter()
                .zip(e.temporal_categories.iter().cycle())
                .map(|(t, c)| json!({"text": t, "category": category_str(c)}))
                .collect();
            let spatial: Vec<Value> = g
                .spatial_texts
                .iter()
                .zip(cats.iter().cycle())
                .map(|(t, c)| json!({"text": t, "category": category_str(c)}))
                .collect();
            let ops: Vec<&str> = e.gt_operations.iter().map(|o| o.as_str()).collect();
            Some(
                json!({
                    "operations": ops,
                    "resolved_command": e.command.text,
                    "references": {"temporal": temporal, "spatial": spatial, "operations": g.operation_texts, "parameters": {}},
                })
                .to_string(),
            )
        });

        let matcher =
            |key: &'static str,
             m: Arc<BTreeMap<String, (GroundTruthEntry, Vec<SpatialRefCategory>)>>| {
                move |p: &Value| {
                    let (e, _) = lookup(&m, p)?;
                    let items = p.get(key)?.as_array()?;
                    let hits: Vec<Value> = items
                        .iter()
                        .filter_map(|it| {
                            let iv = TimeInterval::new(
                                it.get("start_s")?.as_f64()?,
                                it.get("end_s")?.as_f64()?,
                            )
                            .ok()?;
                            let index = it.get("index")?.clone();
                            e.gt_segments
                                .iter()
                                .any(|g| g.interval.intersects(&iv))
                                .then(|| json!({"index": index, "explanation": "ground truth"}))
                        })
                        .collect();
                    Some(Value::Array(hits).to_string())
                }
            };
        let chat = chat
            .rule(
                PromptTemplateId::Stage2Transcript,
                matcher("snippets", by_command.clone()),
            )
            .rule(
                PromptTemplateId::Stage2Video,
                matcher("descriptions", by_command.clone()),
            );

        let m = by_command.clone();
        let chat = chat.rule(PromptTemplateId::Stage2Temporal, move |p| {
            let (e, _) = lookup(&m, p)?;
            let segs: Vec<Value> = e
                .gt_segments
                .iter()
                .map(|g| json!({"start_s": g.interval.start_s(), "end_s": g.interval.end_s(), "explanation": "ground truth"}))
                .collect();
            Some(json!({ "segments": segs }).to_string())
        });

        let m = by_command;
        chat.rule(PromptTemplateId::Stage3SpatialRefine, move |p| {
            let (e, _) = lookup(&m, p)?;
            let r = e.gt_segments.first()?.rect;
            Some(json!({"x": r.x() * fw, "y": r.y() * fh, "width": r.w() * fw, "height": r.h() * fh}).to_string())
        })
    }

    /// Oracle-mode providers around [`SyntheticSuite::oracle_chat`].
    pub fn oracle_providers(&self, embedding_dim: usize) -> Providers {
        Providers::new(
            ProviderMode::Oracle,
            Arc::new(self.oracle_chat()),
            Arc::new(HashEmbedder::new(embedding_dim)),
        )
    }
}
