//! Request and response bodies. Rectangles travel in pixels of the
//! project's frame; everything else matches the core types.

use axum::body::Bytes;
use axum::extract::{FromRequest, Request};
use framecue::engine::{CommandRecord, Edit, EditLayer, EditStatus, Project, Provenance};
use framecue::model::{EditOperation, EditParameters, FrameDims, PixelRect, Rect, TimeInterval};
use framecue::parser::ParsedCommand;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{ApiError, ErrorCode};

/// JSON body extractor. An empty body reads as `{}`; data errors name the
/// offending field path.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = Bytes::from_request(req, state)
            .await
            .map_err(|e| ApiError::new(ErrorCode::BadRequest, e.to_string()))?;
        let text: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) {
            b"{}"
        } else {
            &bytes
        };
        parse_json(text).map(Body)
    }
}

pub fn parse_json<T: DeserializeOwned>(text: &[u8]) -> Result<T, ApiError> {
    let de = &mut serde_json::Deserializer::from_slice(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_data() {
            ApiError::validation(&path, format!("{path}: {inner}"))
        } else {
            ApiError::new(ErrorCode::BadRequest, format!("malformed JSON: {inner}"))
        }
    })
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateProject {
    /// File name of a bundle inside the configured bundle directory.
    pub bundle: String,
    #[serde(default)]
    pub id: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Revisioned {
    #[serde(default)]
    pub expected_revision: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitCommand {
    pub text: String,
    #[serde(default)]
    pub sketch: Option<PixelRect>,
    #[serde(default)]
    pub sketch_frame_t: Option<f64>,
    #[serde(default)]
    pub playhead_t: f64,
    #[serde(default)]
    pub layer_id: Option<String>,
    /// Set when the command refines an earlier one.
    #[serde(default)]
    pub parent_command_id: Option<String>,
    #[serde(default)]
    pub expected_revision: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchEdit {
    #[serde(default)]
    pub expected_revision: Option<u64>,
    #[serde(default)]
    pub interval: Option<TimeInterval>,
    #[serde(default)]
    pub rect: Option<PixelRect>,
    #[serde(default)]
    pub params: Option<Value>,
    #[serde(default)]
    pub operation: Option<EditOperation>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchMore {
    pub near_t: f64,
    #[serde(default)]
    pub expected_revision: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Pending,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Command,
    SearchMore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStatus {
    pub job_id: String,
    pub project_id: String,
    pub kind: JobKind,
    pub state: JobState,
    /// Command record the job created or extended.
    pub command_id: Option<String>,
    /// Edits the job added.
    #[serde(default)]
    pub edit_ids: Vec<String>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

pub fn rect_to_wire(r: &Rect, dims: FrameDims) -> PixelRect {
    r.to_pixels(dims)
}

pub fn rect_from_wire(p: PixelRect, dims: FrameDims, field: &str) -> Result<Rect, ApiError> {
    if p.x < 0
        || p.y < 0
        || p.width <= 0
        || p.height <= 0
        || p.x + p.width > dims.width_px as i64
        || p.y + p.height > dims.height_px as i64
    {
        return Err(ApiError::validation(
            field,
            format!(
                "{field}: {}x{} at ({}, {}) is outside the {}x{} frame",
                p.width, p.height, p.x, p.y, dims.width_px, dims.height_px
            ),
        ));
    }
    Rect::from_pixels(p, dims).map_err(|e| ApiError::validation(field, format!("{field}: {e}")))
}

pub fn params_to_wire(p: &EditParameters, dims: FrameDims) -> Value {
    let mut v = serde_json::to_value(p).expect("params serialize");
    if let EditParameters::Crop(c) = p {
        v["crop_rect"] =
            serde_json::to_value(rect_to_wire(&c.crop_rect, dims)).expect("pixel rect");
    }
    v
}

pub fn params_from_wire(mut v: Value, dims: FrameDims) -> Result<EditParameters, ApiError> {
    if v.get("operation").and_then(Value::as_str) == Some("crop") {
        if let Some(raw) = v.get("crop_rect").cloned() {
            let px: PixelRect = serde_json::from_value(raw).map_err(|e| {
                ApiError::validation("params.crop_rect", format!("params.crop_rect: {e}"))
            })?;
            let r = rect_from_wire(px, dims, "params.crop_rect")?;
            v["crop_rect"] = serde_json::to_value(r).expect("rect");
        }
    }
    // Tagged enums hide field paths, so the variant body is read on its own.
    let op = match v.get("operation") {
        Some(Value::String(s)) => s.clone(),
        _ => {
            return Err(ApiError::validation(
                "params.operation",
                "params.operation: expected an operation name",
            ))
        }
    };
    if let Value::Object(m) = &mut v {
        m.remove("operation");
    }
    let body = serde_json::to_vec(&v).expect("value");
    let rename = |mut e: ApiError| {
        if let Some(f) = e.details.get("field").and_then(Value::as_str) {
            let field = if f == "." {
                "params".to_string()
            } else {
                format!("params.{f}")
            };
            e.message = format!("params: {}", e.message);
            e.details["field"] = Value::String(field);
        }
        e
    };
    let params = match op.as_str() {
        "text" => EditParameters::Text(parse_json(&body).map_err(rename)?),
        "image" => EditParameters::Image(parse_json(&body).map_err(rename)?),
        "shape" => EditParameters::Shape(parse_json(&body).map_err(rename)?),
        "blur" => EditParameters::Blur(parse_json(&body).map_err(rename)?),
        "crop" => EditParameters::Crop(parse_json(&body).map_err(rename)?),
        "zoom" => EditParameters::Zoom(parse_json(&body).map_err(rename)?),
        "cut" => EditParameters::Cut,
        other => {
            return Err(ApiError::validation(
                "params.operation",
                format!("params.operation: unknown operation {other:?}"),
            ))
        }
    };
    Ok(params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireEdit {
    pub id: String,
    pub layer_id: String,
    pub operation: EditOperation,
    pub start_s: f64,
    pub end_s: f64,
    pub rect: PixelRect,
    pub params: Value,
    pub status: EditStatus,
    pub superseded: bool,
    pub low_confidence: bool,
    pub provenance: Provenance,
}

impl WireEdit {
    pub fn new(e: &Edit, layer_id: &str, dims: FrameDims) -> Self {
        WireEdit {
            id: e.id.clone(),
            layer_id: layer_id.into(),
            operation: e.operation,
            start_s: e.interval.start_s(),
            end_s: e.interval.end_s(),
            rect: rect_to_wire(&e.rect, dims),
            params: params_to_wire(&e.params, dims),
            status: e.status,
            superseded: e.superseded,
            low_confidence: e.low_confidence,
            provenance: e.provenance.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireLayer {
    pub id: String,
    pub operation: Option<EditOperation>,
    pub edits: Vec<WireEdit>,
}

impl WireLayer {
    pub fn new(l: &EditLayer, dims: FrameDims) -> Self {
        WireLayer {
            id: l.id.clone(),
            operation: l.operation,
            edits: l
                .edits
                .iter()
                .map(|e| WireEdit::new(e, &l.id, dims))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandSummary {
    pub id: String,
    pub text: String,
    pub summary: String,
    pub parent_command_id: Option<String>,
    pub suggestion_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectWire {
    pub id: String,
    pub video_id: String,
    pub frame_dims: FrameDims,
    pub duration_s: f64,
    pub revision: u64,
    pub can_undo: bool,
    pub can_redo: bool,
    pub layers: Vec<WireLayer>,
    pub commands: Vec<CommandSummary>,
}

impl ProjectWire {
    pub fn new(p: &Project) -> Self {
        let dims = p.frame_dims();
        ProjectWire {
            id: p.id().into(),
            video_id: p.video_id().into(),
            frame_dims: dims,
            duration_s: p.duration_s(),
            revision: p.revision(),
            can_undo: p.can_undo(),
            can_redo: p.can_redo(),
            layers: p.layers().iter().map(|l| WireLayer::new(l, dims)).collect(),
            commands: p
                .commands()
                .iter()
                .map(|c| CommandSummary {
                    id: c.id.clone(),
                    text: c.command.text.clone(),
                    summary: c.summary.clone(),
                    parent_command_id: c.parent_command_id.clone(),
                    suggestion_ids: c.suggestion_ids.clone(),
                })
                .collect(),
        }
    }
}

/// Full breakdown of one command: parse spans with their explanations and
/// every suggestion it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireCommand {
    pub id: String,
    pub project_id: String,
    pub revision: u64,
    pub text: String,
    pub sketch: Option<PixelRect>,
    pub sketch_frame_t: Option<f64>,
    pub playhead_t: f64,
    pub layer_id: Option<String>,
    pub parent_command_id: Option<String>,
    pub summary: String,
    pub selected_operation: EditOperation,
    pub focus_t: Option<f64>,
    pub parse: ParsedCommand,
    pub suggestions: Vec<WireEdit>,
    pub diagnostics: Vec<String>,
}

impl WireCommand {
    pub fn new(p: &Project, c: &CommandRecord) -> Self {
        let dims = p.frame_dims();
        let suggestions = c
            .suggestion_ids
            .iter()
            .filter_map(|id| {
                p.layers().iter().find_map(|l| {
                    l.edits
                        .iter()
                        .find(|e| &e.id == id)
                        .map(|e| WireEdit::new(e, &l.id, dims))
                })
            })
            .collect();
        WireCommand {
            id: c.id.clone(),
            project_id: p.id().into(),
            revision: p.revision(),
            text: c.command.text.clone(),
            sketch: c.command.sketch.map(|r| rect_to_wire(&r, dims)),
            sketch_frame_t: c.command.sketch_frame_t,
            playhead_t: c.command.playhead_t,
            layer_id: c.command.layer_id.clone(),
            parent_command_id: c.parent_command_id.clone(),
            summary: c.summary.clone(),
            selected_operation: c.selected_operation,
            focus_t: c.focus_t,
            parse: c.parse.clone(),
            suggestions,
            diagnostics: c.diagnostics.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditResult {
    pub revision: u64,
    pub edit: WireEdit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCreated {
    pub revision: u64,
    pub layer_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEdit {
    pub id: String,
    pub operation: EditOperation,
    pub start_s: f64,
    pub end_s: f64,
    pub status: EditStatus,
    pub superseded: bool,
    pub command_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineLayer {
    pub id: String,
    pub operation: Option<EditOperation>,
    pub edits: Vec<TimelineEdit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub project_id: String,
    pub revision: u64,
    pub duration_s: f64,
    pub layers: Vec<TimelineLayer>,
}

impl Timeline {
    pub fn new(p: &Project) -> Self {
        Timeline {
            project_id: p.id().into(),
            revision: p.revision(),
            duration_s: p.duration_s(),
            layers: p
                .layers()
                .iter()
                .map(|l| TimelineLayer {
                    id: l.id.clone(),
                    operation: l.operation,
                    edits: l
                        .edits
                        .iter()
                        .map(|e| TimelineEdit {
                            id: e.id.clone(),
                            operation: e.operation,
                            start_s: e.interval.start_s(),
                            end_s: e.interval.end_s(),
                            status: e.status,
                            superseded: e.superseded,
                            command_id: e.provenance.command_id.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub index: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
    /// Non-rejected edits overlapping the line.
    pub edit_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub project_id: String,
    pub revision: u64,
    pub lines: Vec<TranscriptLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub provider_mode: framecue::providers::ProviderMode,
    pub projects: usize,
}
