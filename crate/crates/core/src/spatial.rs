//! Stage 3: where in the frame an edit goes.
//!
//! Decision chain per candidate segment:
//! 1. a visual-dependent reference ranks the instance crops of the
//!    representative frame (`crop_match`),
//! 2. otherwise a sketch is used as drawn (`sketch`),
//! 3. otherwise the full frame (`full_frame`);
//!
//! then, if an independent reference exists, the model adjusts the result
//! (`llm_refined`).

use serde::{Deserialize, Serialize};

use crate::metadata::{BundleError, FrameMetadata, InstanceCrop, MetadataBundle};
use crate::model::{FrameDims, Rect, SpatialRefCategory, TimeInterval};
use crate::parser::{EditCommand, ParsedCommand};
use crate::providers::templates::{FrameBounds, PixelBox, RefineRequest};
use crate::providers::{cosine, ChatRequest, FrameRef, PromptTemplateId, ProviderError, Providers};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialMethod {
    CropMatch,
    Sketch,
    FullFrame,
    LlmRefined,
}

impl SpatialMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpatialMethod::CropMatch => "crop_match",
            SpatialMethod::Sketch => "sketch",
            SpatialMethod::FullFrame => "full_frame",
            SpatialMethod::LlmRefined => "llm_refined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialResult {
    pub rect: Rect,
    pub method: SpatialMethod,
    /// Similarity of the chosen crop; only for `crop_match`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    pub frame_t: f64,
    pub explanation: String,
    /// Method whose rectangle the model adjusted, for `llm_refined`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refined_from: Option<SpatialMethod>,
    #[serde(default)]
    pub low_confidence: bool,
}

/// Frame closest to the middle of `segment`.
pub fn representative_frame<'b>(
    segment: &TimeInterval,
    bundle: &'b MetadataBundle,
) -> Result<&'b FrameMetadata, BundleError> {
    bundle.frame_nearest(segment.midpoint_s())
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum RankError {
    #[error("frame has no instance crops")]
    NoCrops,
    #[error("neither a text reference nor a sketch to rank against")]
    NoQuery,
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// A sketched rectangle and the frame it was drawn on.
#[derive(Debug, Clone, Copy)]
pub struct SketchInput<'a> {
    pub rect: Rect,
    pub frame: FrameRef<'a>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCrop<'a> {
    pub index: usize,
    pub crop: &'a InstanceCrop,
    pub score: f64,
}

/// Crops of `frame` ordered by similarity to the text reference and/or
/// the sketched region (mean of the available cosines); ties go to the
/// larger crop.
pub fn rank_crops<'f>(
    text_ref: Option<&str>,
    sketch: Option<SketchInput<'_>>,
    frame: &'f FrameMetadata,
    providers: &Providers,
) -> Result<Vec<ScoredCrop<'f>>, RankError> {
    if frame.crops.is_empty() {
        return Err(RankError::NoCrops);
    }
    let mut queries = Vec::new();
    if let Some(t) = text_ref {
        queries.push(providers.embed_text(t)?);
    }
    if let Some(s) = sketch {
        queries.push(providers.embed_region(s.frame, &s.rect)?);
    }
    if queries.is_empty() {
        return Err(RankError::NoQuery);
    }
    let mut scored = Vec::with_capacity(frame.crops.len());
    for (index, crop) in frame.crops.iter().enumerate() {
        let mut sum = 0.0;
        for q in &queries {
            sum += cosine(q, &crop.embedding)?;
        }
        scored.push(ScoredCrop {
            index,
            crop,
            score: sum / queries.len() as f64,
        });
    }
    scored.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(b.crop.rect.area().total_cmp(&a.crop.rect.area()))
            .then(a.index.cmp(&b.index))
    });
    Ok(scored)
}

fn check_box(b: &PixelBox) -> Result<(), String> {
    if ![b.x, b.y, b.width, b.height].iter().all(|v| v.is_finite()) {
        return Err("rectangle has a non-finite field".into());
    }
    if b.width <= 0.0 || b.height <= 0.0 {
        return Err(format!(
            "rectangle size {}x{} is not positive",
            b.width, b.height
        ));
    }
    Ok(())
}

/// Outcome of [`refine_independent`].
#[derive(Debug, Clone, PartialEq)]
pub struct Refined {
    pub rect: Rect,
    pub low_confidence: bool,
    pub note: Option<String>,
}

/// Asks the model to move or resize `initial` according to a
/// frame-relative description. Any failure keeps `initial`.
pub fn refine_independent(
    initial: &Rect,
    ref_text: &str,
    command: &str,
    dims: FrameDims,
    providers: &Providers,
) -> Refined {
    let (fw, fh) = (dims.width_px as f64, dims.height_px as f64);
    let req = ChatRequest::new(
        PromptTemplateId::Stage3SpatialRefine,
        RefineRequest {
            reference: ref_text.to_string(),
            command: command.to_string(),
            initial: PixelBox {
                x: initial.x() * fw,
                y: initial.y() * fh,
                width: initial.w() * fw,
                height: initial.h() * fh,
            },
            frame: FrameBounds {
                width: dims.width_px,
                height: dims.height_px,
            },
        },
    );
    let keep = |note: String| Refined {
        rect: Rect::clamp(initial.x(), initial.y(), initial.w(), initial.h()).unwrap_or(*initial),
        low_confidence: true,
        note: Some(note),
    };
    match providers.complete_validated::<PixelBox, _>(&req, check_box) {
        Ok((b, _)) => match Rect::clamp(b.x / fw, b.y / fh, b.width / fw, b.height / fh) {
            Ok(rect) => Refined {
                rect,
                low_confidence: false,
                note: None,
            },
            Err(e) => keep(format!("refined rectangle unusable: {e}")),
        },
        Err(e) => keep(format!("refinement failed: {e}")),
    }
}

fn join_refs(parsed: &ParsedCommand, category: SpatialRefCategory) -> Option<String> {
    let texts: Vec<&str> = parsed
        .spatial_refs
        .iter()
        .filter(|r| r.category == category)
        .map(|r| r.span.surface.as_str())
        .collect();
    (!texts.is_empty()).then(|| texts.join("; "))
}

/// Runs the decision chain for one segment. Never fails: every error
/// moves down the chain and marks the result low-confidence.
pub fn resolve(
    segment: &TimeInterval,
    parsed: &ParsedCommand,
    cmd: &EditCommand,
    bundle: &MetadataBundle,
    providers: &Providers,
) -> SpatialResult {
    let frame = representative_frame(segment, bundle).ok();
    let frame_t = frame
        .map(|f| f.timestamp_s)
        .unwrap_or_else(|| segment.midpoint_s());
    let mut notes: Vec<String> = Vec::new();
    let mut low_confidence = false;

    let sketch_input = match (cmd.sketch, cmd.sketch_frame_t) {
        (Some(rect), Some(t)) => bundle.frame_nearest(t).ok().map(|f| SketchInput {
            rect,
            frame: FrameRef {
                video_id: &bundle.video_id,
                frame: f,
            },
        }),
        _ => None,
    };

    let mut result: Option<SpatialResult> = None;
    if let Some(text) = join_refs(parsed, SpatialRefCategory::VisualDependent) {
        match frame.map(|f| rank_crops(Some(&text), sketch_input, f, providers)) {
            Some(Ok(ranked)) => {
                let best = &ranked[0];
                result = Some(SpatialResult {
                    rect: best.crop.rect,
                    method: SpatialMethod::CropMatch,
                    score: Some(best.score.clamp(-1.0, 1.0)),
                    frame_t,
                    explanation: format!(
                        "region most similar to {text:?} (similarity {:.2})",
                        best.score
                    ),
                    refined_from: None,
                    low_confidence: false,
                });
            }
            Some(Err(RankError::NoCrops)) | None => {
                notes.push(format!("no regions detected for {text:?}"))
            }
            Some(Err(e)) => {
                low_confidence = true;
                notes.push(format!("region matching failed: {e}"));
            }
        }
    }
    let mut result = result.unwrap_or_else(|| match cmd.sketch {
        Some(rect) => SpatialResult {
            rect,
            method: SpatialMethod::Sketch,
            score: None,
            frame_t,
            explanation: "sketched region".into(),
            refined_from: None,
            low_confidence: false,
        },
        None => SpatialResult {
            rect: Rect::FULL_FRAME,
            method: SpatialMethod::FullFrame,
            score: None,
            frame_t,
            explanation: "no region given; full frame".into(),
            refined_from: None,
            low_confidence: false,
        },
    });

    if let Some(text) = join_refs(parsed, SpatialRefCategory::Independent) {
        let refined = refine_independent(
            &result.rect,
            &text,
            &parsed.resolved_text,
            bundle.frame_dims,
            providers,
        );
        if refined.low_confidence {
            low_confidence = true;
            notes.extend(refined.note);
            result.rect = refined.rect;
        } else {
            result = SpatialResult {
                rect: refined.rect,
                method: SpatialMethod::LlmRefined,
                score: None,
                frame_t,
                explanation: format!("{}, adjusted to {text:?}", result.explanation),
                refined_from: Some(result.method),
                low_confidence: false,
            };
        }
    }
    if !notes.is_empty() {
        result.explanation = format!("{} ({})", result.explanation, notes.join("; "));
    }
    result.low_confidence |= low_confidence;
    result
}
