//! Stage 4: edit parameters.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::metadata::MetadataBundle;
use crate::model::{
    BlurParams, CropParams, EditOperation, EditParameters, FrameDims, ImageParams, ParamChangeKind,
    Rect, ShapeKind, ShapeParams, TextParams, TimeInterval, ZoomParams, MAX_GENERATED_CHARS,
};
use crate::parser::ParsedCommand;
use crate::providers::lexical::truncate_words;
use crate::providers::templates::{
    ContentRequest, ImageQueryOutput, ParamsOutput, ParamsRequest, TextContentOutput,
};
use crate::providers::{ChatRequest, PromptTemplateId, Providers};
use crate::spatial::SpatialResult;

pub use crate::providers::templates::{Direction, ParamChangeOut as ParamChange};

/// Relative size of one abstract step ("bigger", "less", ...).
pub const ABSTRACT_STEP: f64 = 0.2;
/// Shortest edit a duration change can produce.
pub const MIN_EDIT_LENGTH_S: f64 = 0.5;
pub const FONT_SIZE_RANGE: (f64, f64) = (1.0, 500.0);
pub const BLUR_DEGREE_MIN: f64 = 0.05;
pub const ZOOM_DURATION_RANGE: (f64, f64) = (0.1, 600.0);
/// Field name for the edit's length, valid for every operation.
pub const DURATION_FIELD: &str = "duration";

/// Starting parameters before any change from the command.
pub fn default_params(
    op: EditOperation,
    spatial: &SpatialResult,
    segment: &TimeInterval,
    dims: FrameDims,
) -> EditParameters {
    match op {
        EditOperation::Text => EditParameters::Text(TextParams {
            content: String::new(),
            font_style: String::new(),
            font_color: "white".into(),
            font_size: dims.height_px as f64 * 0.05,
        }),
        EditOperation::Image => EditParameters::Image(ImageParams {
            visual_keywords: String::new(),
            source_uri: None,
        }),
        EditOperation::Shape => EditParameters::Shape(ShapeParams {
            kind: ShapeKind::Rectangle,
        }),
        EditOperation::Blur => EditParameters::Blur(BlurParams { degree: 0.5 }),
        EditOperation::Cut => EditParameters::Cut,
        EditOperation::Crop => EditParameters::Crop(CropParams {
            crop_rect: spatial.rect,
        }),
        EditOperation::Zoom => EditParameters::Zoom(ZoomParams {
            animation_duration_s: segment.length_s(),
        }),
    }
}

/// Field names a change may target for `op`.
pub fn fields_for(op: EditOperation) -> &'static [&'static str] {
    match op {
        EditOperation::Text => &[
            "content",
            "font_style",
            "font_color",
            "font_size",
            DURATION_FIELD,
        ],
        EditOperation::Image => &["visual_keywords", "source_uri", DURATION_FIELD],
        EditOperation::Shape => &["kind", DURATION_FIELD],
        EditOperation::Blur => &["degree", DURATION_FIELD],
        EditOperation::Cut => &[DURATION_FIELD],
        EditOperation::Crop => &["crop_rect", DURATION_FIELD],
        EditOperation::Zoom => &["animation_duration_s", DURATION_FIELD],
    }
}

fn check_change_shapes(out: &ParamsOutput) -> Result<(), String> {
    for c in &out.changes {
        let ok = match c.kind {
            ParamChangeKind::Explicit => c.value.is_some(),
            ParamChangeKind::Relative => c.delta.is_some() || c.factor.is_some(),
            ParamChangeKind::Abstract => c.direction.is_some(),
        };
        if !ok {
            return Err(format!(
                "{:?} change of {:?} lacks its value",
                c.kind, c.field
            ));
        }
    }
    Ok(())
}

/// Result of [`classify_changes`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Classified {
    pub changes: Vec<ParamChange>,
    pub low_confidence: bool,
    pub diagnostics: Vec<String>,
}

/// Reads the requested parameter changes out of a reference.
pub fn classify_changes(
    param_ref_text: &str,
    op: EditOperation,
    command: &str,
    initial: &EditParameters,
    providers: &Providers,
) -> Classified {
    let mut initial_parameters = serde_json::to_value(initial).expect("parameters serialize");
    if let Value::Object(m) = &mut initial_parameters {
        m.remove("operation");
    }
    let req = ChatRequest::new(
        PromptTemplateId::Stage4Params,
        ParamsRequest {
            operation: op.as_str().into(),
            reference: param_ref_text.into(),
            command: command.into(),
            initial_parameters,
        },
    );
    match providers.complete_validated::<ParamsOutput, _>(&req, check_change_shapes) {
        Ok((out, _)) => Classified {
            changes: out.changes,
            low_confidence: false,
            diagnostics: Vec::new(),
        },
        Err(e) => Classified {
            changes: Vec::new(),
            low_confidence: true,
            diagnostics: vec![format!("parameter changes not read: {e}")],
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub params: EditParameters,
    pub interval: TimeInterval,
    /// One entry per change that was not applied.
    pub diagnostics: Vec<String>,
}

/// Leading number of a value like `12`, `"12px"` or `"50%"`; percentages
/// come back divided by 100.
fn number_of(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => {
            let s = s.trim();
            let end = s
                .char_indices()
                .find(|&(i, c)| {
                    !(c.is_ascii_digit() || c == '.' || (i == 0 && (c == '-' || c == '+')))
                })
                .map(|(i, _)| i)
                .unwrap_or(s.len());
            let n: f64 = s[..end].parse().ok()?;
            Some(if s[end..].trim_start().starts_with('%') {
                n / 100.0
            } else {
                n
            })
        }
        _ => None,
    }
}

fn numeric_update(current: f64, c: &ParamChange) -> Result<f64, String> {
    match c.kind {
        ParamChangeKind::Explicit => number_of(c.value.as_ref().unwrap_or(&Value::Null))
            .ok_or_else(|| format!("{:?} is not a number", c.value)),
        ParamChangeKind::Relative => match (c.delta, c.factor) {
            (Some(d), _) => Ok(current + d),
            (None, Some(f)) => Ok(current * f),
            (None, None) => Err("relative change without delta or factor".into()),
        },
        ParamChangeKind::Abstract => match c.direction {
            Some(Direction::Increase) => Ok(current * (1.0 + ABSTRACT_STEP)),
            Some(Direction::Decrease) => Ok(current * (1.0 - ABSTRACT_STEP)),
            None => Err("abstract change without direction".into()),
        },
    }
    .and_then(|v| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err("result is not finite".into())
        }
    })
}

fn string_update(c: &ParamChange) -> Result<String, String> {
    match (c.kind, &c.value) {
        (ParamChangeKind::Explicit, Some(Value::String(s))) => Ok(s.trim().to_string()),
        (ParamChangeKind::Explicit, Some(v)) if !v.is_null() && !v.is_object() && !v.is_array() => {
            Ok(v.to_string())
        }
        (ParamChangeKind::Explicit, _) => Err("explicit value must be a string".into()),
        _ => Err(format!(
            "{:?} change does not apply to a text field",
            c.kind
        )),
    }
}

fn apply_one(
    params: &mut EditParameters,
    interval: &mut TimeInterval,
    c: &ParamChange,
    duration_s: f64,
) -> Result<(), String> {
    let field = c.field.trim();
    if field == DURATION_FIELD {
        let len = numeric_update(interval.length_s(), c)?;
        let start = interval.start_s();
        let end = (start + len.max(MIN_EDIT_LENGTH_S)).min(duration_s);
        *interval = TimeInterval::new(start, end).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let op = params.operation();
    let unknown = || Err(format!("unknown field {field:?} for {op}"));
    match params {
        EditParameters::Text(p) => match field {
            "content" => p.content = truncate_words(&string_update(c)?, MAX_GENERATED_CHARS),
            "font_style" => p.font_style = string_update(c)?,
            "font_color" => p.font_color = string_update(c)?,
            "font_size" => {
                p.font_size =
                    numeric_update(p.font_size, c)?.clamp(FONT_SIZE_RANGE.0, FONT_SIZE_RANGE.1)
            }
            _ => return unknown(),
        },
        EditParameters::Image(p) => match field {
            "visual_keywords" => {
                p.visual_keywords = truncate_words(&string_update(c)?, MAX_GENERATED_CHARS)
            }
            "source_uri" => p.source_uri = Some(string_update(c)?),
            _ => return unknown(),
        },
        EditParameters::Shape(p) => match field {
            "kind" => {
                p.kind = string_update(c)?
                    .parse()
                    .map_err(|e: crate::model::ModelError| e.to_string())?
            }
            _ => return unknown(),
        },
        EditParameters::Blur(p) => match field {
            "degree" => {
                let mut v = numeric_update(p.degree, c)?;
                if c.kind == ParamChangeKind::Explicit && v > 1.0 && v <= 100.0 {
                    v /= 100.0;
                }
                p.degree = v.clamp(BLUR_DEGREE_MIN, 1.0);
            }
            _ => return unknown(),
        },
        EditParameters::Zoom(p) => match field {
            "animation_duration_s" => {
                p.animation_duration_s = numeric_update(p.animation_duration_s, c)?
                    .clamp(ZOOM_DURATION_RANGE.0, ZOOM_DURATION_RANGE.1)
            }
            _ => return unknown(),
        },
        EditParameters::Crop(p) => match field {
            "crop_rect" => {
                if c.kind != ParamChangeKind::Explicit {
                    return Err("crop_rect only takes explicit rectangles".into());
                }
                let v = c.value.as_ref().ok_or("missing rectangle")?;
                let g = |k: &str| {
                    v.get(k)
                        .and_then(Value::as_f64)
                        .ok_or(format!("crop_rect lacks {k}"))
                };
                p.crop_rect =
                    Rect::clamp(g("x")?, g("y")?, g("w")?, g("h")?).map_err(|e| e.to_string())?;
            }
            _ => return unknown(),
        },
        EditParameters::Cut => return unknown(),
    }
    Ok(())
}

/// Applies changes in order. A change that cannot be applied is skipped
/// with a diagnostic; the others still apply. Duration changes keep the
/// start of `interval` fixed.
pub fn apply_changes(
    initial: &EditParameters,
    changes: &[ParamChange],
    interval: &TimeInterval,
    duration_s: f64,
) -> Applied {
    let mut params = initial.clone();
    let mut iv = *interval;
    let mut diagnostics = Vec::new();
    for c in changes {
        let mut trial_params = params.clone();
        let mut trial_iv = iv;
        match apply_one(&mut trial_params, &mut trial_iv, c, duration_s)
            .and_then(|_| trial_params.validate().map_err(|e| e.to_string()))
        {
            Ok(()) => {
                params = trial_params;
                iv = trial_iv;
            }
            Err(e) => diagnostics.push(format!("change to {:?} rejected: {e}", c.field)),
        }
    }
    Applied {
        params,
        interval: iv,
        diagnostics,
    }
}

/// Transcript and clip descriptions that overlap `segment`.
pub fn relevant_content(bundle: &MetadataBundle, segment: &TimeInterval) -> Vec<String> {
    let mut out: Vec<String> = bundle
        .snippets_in_range(segment)
        .into_iter()
        .map(|s| s.text.clone())
        .collect();
    for c in bundle.clips_overlapping(segment) {
        out.push(format!(
            "{}; {}; {}",
            c.action_label,
            c.abstract_caption,
            c.dense_captions.join("; ")
        ));
    }
    out
}

fn content_request(
    template: PromptTemplateId,
    reference: &str,
    command: &str,
    relevant: &[String],
) -> ChatRequest {
    ChatRequest::new(
        template,
        ContentRequest {
            reference: reference.into(),
            command: command.into(),
            relevant_content: relevant.to_vec(),
        },
    )
}

fn non_empty(s: &str) -> Result<(), String> {
    if s.trim().is_empty() {
        Err("empty output".into())
    } else {
        Ok(())
    }
}

/// On-screen text, at most 100 characters; the command itself on failure.
pub fn generate_text_content(
    reference: &str,
    command: &str,
    relevant: &[String],
    providers: &Providers,
) -> String {
    let req = content_request(
        PromptTemplateId::Stage4TextContent,
        reference,
        command,
        relevant,
    );
    match providers.complete_validated::<TextContentOutput, _>(&req, |o| non_empty(&o.text)) {
        Ok((o, _)) => truncate_words(&o.text, MAX_GENERATED_CHARS),
        Err(_) => truncate_words(command, MAX_GENERATED_CHARS),
    }
}

/// Image search query, at most 100 characters; the command on failure.
pub fn generate_image_query(
    reference: &str,
    command: &str,
    relevant: &[String],
    providers: &Providers,
) -> String {
    let req = content_request(
        PromptTemplateId::Stage4ImageQuery,
        reference,
        command,
        relevant,
    );
    match providers.complete_validated::<ImageQueryOutput, _>(&req, |o| non_empty(&o.query)) {
        Ok((o, _)) => truncate_words(&o.query, MAX_GENERATED_CHARS),
        Err(_) => truncate_words(command, MAX_GENERATED_CHARS),
    }
}

/// Parameters for one suggested edit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamOutcome {
    pub params: EditParameters,
    pub interval: TimeInterval,
    pub changes: Vec<ParamChange>,
    pub low_confidence: bool,
    pub diagnostics: Vec<String>,
}

/// Defaults, then the command's changes, then generated content for text
/// and image edits that still lack it.
pub fn interpret_params(
    op: EditOperation,
    parsed: &ParsedCommand,
    segment: &TimeInterval,
    spatial: &SpatialResult,
    bundle: &MetadataBundle,
    providers: &Providers,
) -> ParamOutcome {
    let initial = default_params(op, spatial, segment, bundle.frame_dims);
    let ref_text = parsed
        .param_refs
        .get(&op)
        .map(|spans| {
            spans
                .iter()
                .map(|s| s.surface.as_str())
                .collect::<Vec<_>>()
                .join("; ")
        })
        .unwrap_or_default();
    let mut diagnostics = Vec::new();
    let mut low_confidence = false;
    let mut changes = Vec::new();
    if !ref_text.is_empty() && op != EditOperation::Cut {
        let c = classify_changes(&ref_text, op, &parsed.resolved_text, &initial, providers);
        low_confidence = c.low_confidence;
        diagnostics.extend(c.diagnostics);
        changes = c.changes;
    }
    let applied = apply_changes(&initial, &changes, segment, bundle.duration_s);
    diagnostics.extend(applied.diagnostics);
    let mut params = applied.params;
    let reference = if ref_text.is_empty() {
        parsed.resolved_text.as_str()
    } else {
        ref_text.as_str()
    };
    match &mut params {
        EditParameters::Text(p) if p.content.is_empty() => {
            let relevant = relevant_content(bundle, &applied.interval);
            p.content =
                generate_text_content(reference, &parsed.resolved_text, &relevant, providers);
        }
        EditParameters::Image(p) if p.visual_keywords.is_empty() => {
            let relevant = relevant_content(bundle, &applied.interval);
            p.visual_keywords =
                generate_image_query(reference, &parsed.resolved_text, &relevant, providers);
        }
        _ => {}
    }
    ParamOutcome {
        params,
        interval: applied.interval,
        changes,
        low_confidence,
        diagnostics,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{HashEmbedder, OracleChat, ProviderMode};
    use crate::spatial::SpatialMethod;
    use proptest::prelude::*;
    use serde_json::json;
    use std::sync::Arc;

    fn iv(a: f64, b: f64) -> TimeInterval {
        TimeInterval::new(a, b).unwrap()
    }

    fn full() -> SpatialResult {
        SpatialResult {
            rect: Rect::FULL_FRAME,
            method: SpatialMethod::FullFrame,
            score: None,
            frame_t: 0.0,
            explanation: String::new(),
            refined_from: None,
            low_confidence: false,
        }
    }

    fn change(v: Value) -> ParamChange {
        serde_json::from_value(v).unwrap()
    }

    fn dims() -> FrameDims {
        FrameDims::new(1280, 720).unwrap()
    }

    #[test]
    fn defaults() {
        let seg = iv(10.0, 22.0);
        match default_params(EditOperation::Text, &full(), &seg, dims()) {
            EditParameters::Text(p) => {
                assert_eq!(p.font_size, 36.0);
                assert_eq!(p.font_color, "white");
                assert_eq!((p.font_style.as_str(), p.content.as_str()), ("", ""));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            default_params(EditOperation::Cut, &full(), &seg, dims()),
            EditParameters::Cut
        );
        assert_eq!(
            default_params(EditOperation::Zoom, &full(), &seg, dims()),
            EditParameters::Zoom(ZoomParams {
                animation_duration_s: 12.0
            })
        );
        for op in EditOperation::ALL {
            let p = default_params(op, &full(), &seg, dims());
            assert_eq!(p.operation(), op);
            assert!(p.validate().is_ok());
        }
    }

    #[test]
    fn apply_examples() {
        let text = EditParameters::Text(TextParams {
            content: "x".into(),
            font_style: String::new(),
            font_color: "white".into(),
            font_size: 24.0,
        });
        let a = apply_changes(
            &text,
            &[change(
                json!({"field": "font_size", "kind": "explicit", "value": "12px"}),
            )],
            &iv(0.0, 5.0),
            100.0,
        );
        assert!(matches!(a.params, EditParameters::Text(ref p) if p.font_size == 12.0));

        let a = apply_changes(
            &EditParameters::Cut,
            &[change(
                json!({"field": "duration", "kind": "relative", "delta": 5}),
            )],
            &iv(10.0, 20.0),
            100.0,
        );
        assert_eq!(a.interval, iv(10.0, 25.0));

        let blur = EditParameters::Blur(BlurParams { degree: 0.5 });
        let a = apply_changes(
            &blur,
            &[change(
                json!({"field": "degree", "kind": "abstract", "direction": "increase"}),
            )],
            &iv(0.0, 5.0),
            100.0,
        );
        assert!(matches!(a.params, EditParameters::Blur(ref p) if (p.degree - 0.6).abs() < 1e-12));

        let a = apply_changes(
            &blur,
            &[
                change(json!({"field": "volume", "kind": "explicit", "value": 3})),
                change(json!({"field": "duration", "kind": "abstract", "direction": "decrease"})),
            ],
            &iv(0.0, 10.0),
            100.0,
        );
        assert_eq!(a.diagnostics.len(), 1);
        assert_eq!(a.interval, iv(0.0, 8.0));

        // Duration stops at the end of the video and never drops below the minimum.
        let a = apply_changes(
            &EditParameters::Cut,
            &[change(
                json!({"field": "duration", "kind": "relative", "delta": 50}),
            )],
            &iv(90.0, 95.0),
            100.0,
        );
        assert_eq!(a.interval, iv(90.0, 100.0));
        let a = apply_changes(
            &EditParameters::Cut,
            &[change(
                json!({"field": "duration", "kind": "explicit", "value": 0}),
            )],
            &iv(10.0, 20.0),
            100.0,
        );
        assert_eq!(a.interval, iv(10.0, 10.5));

        let a = apply_changes(
            &EditParameters::Shape(ShapeParams {
                kind: ShapeKind::Rectangle,
            }),
            &[change(
                json!({"field": "kind", "kind": "explicit", "value": "star"}),
            )],
            &iv(0.0, 1.0),
            10.0,
        );
        assert_eq!(
            a.params,
            EditParameters::Shape(ShapeParams {
                kind: ShapeKind::Star
            })
        );
        let a = apply_changes(
            &EditParameters::Blur(BlurParams { degree: 0.5 }),
            &[change(
                json!({"field": "degree", "kind": "relative", "factor": 0.9}),
            )],
            &iv(0.0, 1.0),
            10.0,
        );
        assert!(matches!(a.params, EditParameters::Blur(ref p) if (p.degree - 0.45).abs() < 1e-12));
    }

    #[test]
    fn classify_via_lexical_model() {
        let providers = Providers::offline(16);
        let text = default_params(EditOperation::Text, &full(), &iv(0.0, 5.0), dims());
        let c = classify_changes("12px", EditOperation::Text, "", &text, &providers);
        assert_eq!(c.changes[0].field, "font_size");
        assert_eq!(c.changes[0].kind, ParamChangeKind::Explicit);
        let c = classify_changes(
            "5 seconds longer",
            EditOperation::Cut,
            "",
            &EditParameters::Cut,
            &providers,
        );
        assert_eq!(
            (c.changes[0].kind, c.changes[0].delta),
            (ParamChangeKind::Relative, Some(5.0))
        );
        let c = classify_changes(
            "shorter",
            EditOperation::Cut,
            "",
            &EditParameters::Cut,
            &providers,
        );
        assert_eq!(
            (c.changes[0].kind, c.changes[0].direction),
            (ParamChangeKind::Abstract, Some(Direction::Decrease))
        );

        let broken = Providers::new(
            ProviderMode::Oracle,
            Arc::new(OracleChat::new().rule(PromptTemplateId::Stage4Params, |_| Some("{}".into()))),
            Arc::new(HashEmbedder::new(8)),
        );
        let c = classify_changes("12px", EditOperation::Text, "", &text, &broken);
        assert!(c.changes.is_empty() && c.low_confidence);
    }

    #[test]
    fn generation_is_bounded_and_falls_back() {
        let providers = Providers::offline(16);
        let snippet = "My best advice tip is to start small.".to_string();
        let t = generate_text_content(
            "advice",
            "add text whenever there is advice",
            &[snippet.clone()],
            &providers,
        );
        assert!(t.chars().count() <= MAX_GENERATED_CHARS);
        assert!(snippet.contains(&t));
        let q = generate_image_query(
            "a picture of a lamp",
            "add a picture of a lamp",
            &[],
            &providers,
        );
        assert!(q.contains("lamp"));

        let failing = Providers::new(
            ProviderMode::Oracle,
            Arc::new(OracleChat::new()),
            Arc::new(HashEmbedder::new(8)),
        );
        let long = "z".repeat(150);
        assert_eq!(
            generate_text_content("x", &long, &[], &failing)
                .chars()
                .count(),
            100
        );
        assert_eq!(
            generate_image_query("x", "add a picture of a lamp", &[], &failing),
            "add a picture of a lamp"
        );
    }

    fn arb_change() -> impl Strategy<Value = ParamChange> {
        let field = prop::sample::select(vec![
            "content",
            "font_size",
            "font_color",
            "degree",
            "kind",
            "animation_duration_s",
            "duration",
            "crop_rect",
            "bogus",
        ]);
        let value = prop_oneof![
            (-1000.0f64..1000.0).prop_map(|v| json!(v)),
            "[a-z ]{0,150}".prop_map(|s| json!(s)),
            Just(json!("circle")),
            Just(json!({"x": 0.9, "y": 0.9, "w": 0.3, "h": 0.3})),
        ];
        (field, 0u8..3, value, -50.0f64..50.0, 0.0f64..3.0, any::<bool>()).prop_map(|(field, kind, value, delta, factor, up)| {
            match kind {
                0 => change(json!({"field": field, "kind": "explicit", "value": value})),
                1 if up => change(json!({"field": field, "kind": "relative", "delta": delta})),
                1 => change(json!({"field": field, "kind": "relative", "factor": factor})),
                _ => change(json!({"field": field, "kind": "abstract", "direction": if up { "increase" } else { "decrease" }})),
            }
        })
    }

    proptest! {
        #[test]
        fn outputs_always_valid(op_idx in 0usize..7, changes in proptest::collection::vec(arb_change(), 0..8), start in 0.0f64..90.0) {
            let op = EditOperation::ALL[op_idx];
            let seg = iv(start, start + 5.0);
            let initial = default_params(op, &full(), &seg, dims());
            let a = apply_changes(&initial, &changes, &seg, 100.0);
            prop_assert!(a.params.validate().is_ok());
            prop_assert_eq!(a.params.operation(), op);
            prop_assert_eq!(a.interval.start_s(), start);
            prop_assert!(a.interval.end_s() <= 100.0);
        }

        #[test]
        fn explicit_changes_idempotent(op_idx in 0usize..7, changes in proptest::collection::vec(arb_change(), 0..6)) {
            let op = EditOperation::ALL[op_idx];
            let explicit: Vec<ParamChange> = changes.into_iter().filter(|c| c.kind == ParamChangeKind::Explicit).collect();
            let seg = iv(10.0, 20.0);
            let initial = default_params(op, &full(), &seg, dims());
            let once = apply_changes(&initial, &explicit, &seg, 100.0);
            let twice = apply_changes(&once.params, &explicit, &once.interval, 100.0);
            prop_assert_eq!(once.params, twice.params);
            prop_assert_eq!(once.interval, twice.interval);
        }

        #[test]
        fn distinct_fields_commute(a in arb_change(), b in arb_change()) {
            prop_assume!(a.field != b.field);
            let seg = iv(10.0, 20.0);
            for op in EditOperation::ALL {
                let initial = default_params(op, &full(), &seg, dims());
                let ab = apply_changes(&initial, &[a.clone(), b.clone()], &seg, 100.0);
                let ba = apply_changes(&initial, &[b.clone(), a.clone()], &seg, 100.0);
                prop_assert_eq!(ab.params, ba.params);
                prop_assert_eq!(ab.interval, ba.interval);
            }
        }
    }
}
