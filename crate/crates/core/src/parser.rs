//! Stage 1: split a command into categorized references and classify the
//! edit operations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EditOperation, Rect, SpatialRefCategory, TemporalRefCategory};
use crate::providers::lexical::scan_operation_keywords;
use crate::providers::templates::{ParseOutput, ParseRequest};
use crate::providers::{ChatRequest, PromptTemplateId, ProviderError, Providers};
use crate::timecode::scan_positions;

/// A natural-language command, optionally with a sketched rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditCommand {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sketch: Option<Rect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sketch_frame_t: Option<f64>,
    #[serde(default)]
    pub playhead_t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommandError {
    #[error("command text is empty")]
    EmptyText,
    #[error("sketch and sketch_frame_t must be given together")]
    SketchWithoutFrame,
    #[error("{field} = {value} is outside the video [0, {duration_s})")]
    OutOfRange {
        field: &'static str,
        value: f64,
        duration_s: f64,
    },
}

impl EditCommand {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            sketch: None,
            sketch_frame_t: None,
            playhead_t: 0.0,
            layer_id: None,
        }
    }

    pub fn with_sketch(mut self, rect: Rect, frame_t: f64) -> Self {
        self.sketch = Some(rect);
        self.sketch_frame_t = Some(frame_t);
        self
    }

    pub fn at(mut self, playhead_t: f64) -> Self {
        self.playhead_t = playhead_t;
        self
    }

    pub fn validate(&self, duration_s: f64) -> Result<(), CommandError> {
        if self.text.trim().is_empty() {
            return Err(CommandError::EmptyText);
        }
        if self.sketch.is_some() != self.sketch_frame_t.is_some() {
            return Err(CommandError::SketchWithoutFrame);
        }
        if let Some(t) = self.sketch_frame_t {
            if !(t >= 0.0 && t < duration_s) {
                return Err(CommandError::OutOfRange {
                    field: "sketch_frame_t",
                    value: t,
                    duration_s,
                });
            }
        }
        if !(self.playhead_t >= 0.0 && self.playhead_t <= duration_s) {
            return Err(CommandError::OutOfRange {
                field: "playhead_t",
                value: self.playhead_t,
                duration_s,
            });
        }
        Ok(())
    }
}

/// A slice of the resolved command text. Offsets count Unicode scalar
/// values, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefSpan {
    pub char_start: usize,
    pub char_end: usize,
    pub surface: String,
}

impl RefSpan {
    pub fn overlaps(&self, other: &RefSpan) -> bool {
        self.char_start < other.char_end && other.char_start < self.char_end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalRef {
    pub span: RefSpan,
    pub category: TemporalRefCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialRef {
    pub span: RefSpan,
    pub category: SpatialRefCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedCommand {
    pub original_text: String,
    pub resolved_text: String,
    pub operations: Vec<EditOperation>,
    #[serde(default)]
    pub operation_refs: Vec<RefSpan>,
    #[serde(default)]
    pub temporal_refs: Vec<TemporalRef>,
    #[serde(default)]
    pub spatial_refs: Vec<SpatialRef>,
    #[serde(default)]
    pub param_refs: BTreeMap<EditOperation, Vec<RefSpan>>,
    #[serde(default)]
    pub low_confidence: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl ParsedCommand {
    /// The operation pre-selected for the command.
    pub fn head_operation(&self) -> EditOperation {
        self.operations[0]
    }

    pub fn has_spatial(&self, category: SpatialRefCategory) -> bool {
        self.spatial_refs.iter().any(|r| r.category == category)
    }
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Finds reference surfaces in a text without letting spans of one kind
/// overlap.
struct Locator<'a> {
    text: &'a str,
    used: Vec<(usize, usize)>,
}

impl<'a> Locator<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            text,
            used: Vec::new(),
        }
    }

    fn byte_to_char(&self, b: usize) -> usize {
        char_len(&self.text[..b])
    }

    /// `Ok(None)` for a repeat of an already located surface.
    fn locate(&mut self, surface: &str) -> Result<Option<RefSpan>, String> {
        let needle = surface.trim();
        if needle.is_empty() {
            return Err("empty reference text".into());
        }
        let free = |s: usize, e: usize, used: &[(usize, usize)]| {
            used.iter().all(|&(a, b)| e <= a || b <= s)
        };
        let hay = self.text;
        let mut found = None;
        let mut repeated = false;
        for pass in 0..2 {
            for (b, _) in hay.char_indices() {
                let end = b + needle.len();
                if end > hay.len() || !hay.is_char_boundary(end) {
                    continue;
                }
                let cand = &hay[b..end];
                let hit = if pass == 0 {
                    cand == needle
                } else {
                    cand.eq_ignore_ascii_case(needle)
                };
                if !hit {
                    continue;
                }
                if free(b, end, &self.used) {
                    found = Some((b, end));
                    break;
                }
                repeated = true;
            }
            if found.is_some() {
                break;
            }
        }
        match found {
            Some((b, e)) => {
                self.used.push((b, e));
                Ok(Some(RefSpan {
                    char_start: self.byte_to_char(b),
                    char_end: self.byte_to_char(e),
                    surface: hay[b..e].to_string(),
                }))
            }
            None if repeated => Ok(None),
            None => Err(format!(
                "reference {surface:?} does not occur in the command"
            )),
        }
    }
}

/// Turns a model reply into a [`ParsedCommand`], checking every reference
/// against the resolved text.
pub fn build_parsed(original: &str, out: &ParseOutput) -> Result<ParsedCommand, String> {
    let mut operations: Vec<EditOperation> = Vec::new();
    for raw in &out.operations {
        let op: EditOperation = raw
            .parse()
            .map_err(|_| format!("unknown operation {raw:?}"))?;
        if !operations.contains(&op) {
            operations.push(op);
        }
    }
    if operations.is_empty() {
        return Err("no operation given".into());
    }
    let resolved = out
        .resolved_command
        .as_deref()
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .unwrap_or(original)
        .to_string();
    let mut diagnostics = Vec::new();

    let mut loc = Locator::new(&resolved);
    let mut temporal_refs = Vec::new();
    for r in &out.references.temporal {
        if let Some(span) = loc.locate(&r.text)? {
            temporal_refs.push(TemporalRef {
                span,
                category: r.category,
            });
        }
    }
    let mut loc = Locator::new(&resolved);
    let mut spatial_refs = Vec::new();
    for r in &out.references.spatial {
        if let Some(span) = loc.locate(&r.text)? {
            spatial_refs.push(SpatialRef {
                span,
                category: r.category,
            });
        }
    }
    let mut loc = Locator::new(&resolved);
    let mut operation_refs = Vec::new();
    for r in &out.references.operations {
        if let Some(span) = loc.locate(r)? {
            operation_refs.push(span);
        }
    }
    let mut param_refs = BTreeMap::new();
    for (key, texts) in &out.references.parameters {
        let op: EditOperation = match key.parse() {
            Ok(op) if operations.contains(&op) => op,
            _ => {
                diagnostics.push(format!(
                    "parameter references for {key:?} ignored: not among the operations"
                ));
                continue;
            }
        };
        let mut loc = Locator::new(&resolved);
        let mut spans = Vec::new();
        for t in texts {
            if let Some(span) = loc.locate(t)? {
                spans.push(span);
            }
        }
        spans.sort_by_key(|s| s.char_start);
        param_refs.insert(op, spans);
    }
    temporal_refs.sort_by_key(|r| r.span.char_start);
    spatial_refs.sort_by_key(|r| r.span.char_start);
    operation_refs.sort_by_key(|r| r.char_start);

    Ok(ParsedCommand {
        original_text: original.to_string(),
        resolved_text: resolved,
        operations,
        operation_refs,
        temporal_refs,
        spatial_refs,
        param_refs,
        low_confidence: false,
        diagnostics,
    })
}

/// Runs the stage-1 prompt. A reply that stays malformed after repairs
/// degrades to [`fallback_parse`] with `low_confidence` set.
pub fn parse(cmd: &EditCommand, providers: &Providers) -> Result<ParsedCommand, ProviderError> {
    let req = ChatRequest::new(
        PromptTemplateId::Stage1Parse,
        ParseRequest {
            command: cmd.text.clone(),
            has_sketch: cmd.sketch.is_some(),
        },
    );
    match providers
        .complete_validated::<ParseOutput, _>(&req, |out| build_parsed(&cmd.text, out).map(|_| ()))
    {
        Ok((out, _)) => Ok(build_parsed(&cmd.text, &out).expect("validated above")),
        Err(ProviderError::MalformedResponse { reason, .. }) => {
            let mut p = fallback_parse(cmd);
            p.low_confidence = true;
            p.diagnostics.push(format!(
                "model parse rejected ({reason}); used keyword fallback"
            ));
            Ok(p)
        }
        Err(e) => Err(e),
    }
}

/// Deterministic keyword and timecode parse. Total.
pub fn fallback_parse(cmd: &EditCommand) -> ParsedCommand {
    let text = cmd.text.as_str();
    let span = |s: usize, e: usize| RefSpan {
        char_start: char_len(&text[..s]),
        char_end: char_len(&text[..e]),
        surface: text[s..e].to_string(),
    };
    let temporal_refs = scan_positions(text)
        .into_iter()
        .map(|m| TemporalRef {
            span: span(m.start, m.end),
            category: TemporalRefCategory::Position,
        })
        .collect();
    let hits = scan_operation_keywords(text);
    let mut operations = Vec::new();
    for (_, _, op) in &hits {
        if !operations.contains(op) {
            operations.push(*op);
        }
    }
    if operations.is_empty() {
        operations.push(EditOperation::Text);
    }
    let operation_refs = hits.iter().map(|(s, e, _)| span(*s, *e)).collect();
    let mut param_refs = BTreeMap::new();
    let trimmed_start = text.len() - text.trim_start().len();
    let trimmed_end = text.trim_end().len();
    if trimmed_start < trimmed_end {
        for op in &operations {
            param_refs.insert(*op, vec![span(trimmed_start, trimmed_end)]);
        }
    }
    ParsedCommand {
        original_text: text.to_string(),
        resolved_text: text.to_string(),
        operations,
        operation_refs,
        temporal_refs,
        spatial_refs: Vec::new(),
        param_refs,
        low_confidence: false,
        diagnostics: Vec::new(),
    }
}

/// Every broken span invariant, as readable messages.
pub fn validate_spans(p: &ParsedCommand) -> Vec<String> {
    let mut out = Vec::new();
    let chars: Vec<char> = p.resolved_text.chars().collect();
    let mut check = |kind: &str, spans: &[&RefSpan]| {
        for s in spans {
            if !(s.char_start < s.char_end && s.char_end <= chars.len()) {
                out.push(format!(
                    "{kind} span {}..{} outside 0..{}",
                    s.char_start,
                    s.char_end,
                    chars.len()
                ));
                continue;
            }
            let slice: String = chars[s.char_start..s.char_end].iter().collect();
            if slice != s.surface {
                out.push(format!(
                    "{kind} span surface {:?} differs from text {slice:?}",
                    s.surface
                ));
            }
        }
        for (i, a) in spans.iter().enumerate() {
            for b in &spans[i + 1..] {
                if a.overlaps(b) {
                    out.push(format!(
                        "{kind} spans {:?} and {:?} overlap",
                        a.surface, b.surface
                    ));
                }
            }
        }
    };
    check(
        "temporal",
        &p.temporal_refs.iter().map(|r| &r.span).collect::<Vec<_>>(),
    );
    check(
        "spatial",
        &p.spatial_refs.iter().map(|r| &r.span).collect::<Vec<_>>(),
    );
    check("operation", &p.operation_refs.iter().collect::<Vec<_>>());
    for (op, spans) in &p.param_refs {
        check(
            &format!("{op} parameter"),
            &spans.iter().collect::<Vec<_>>(),
        );
    }
    if p.operations.is_empty() {
        out.push("no operations".into());
    }
    for op in p.param_refs.keys() {
        if !p.operations.contains(op) {
            out.push(format!(
                "parameter references for {op} which is not an operation"
            ));
        }
    }
    out
}
