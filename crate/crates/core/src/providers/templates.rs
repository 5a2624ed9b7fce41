//! Prompt templates and the JSON shapes exchanged with the language model.
//!
//! Each template has a fixed instruction text (sent as the system message in
//! live mode), a request payload type and an output type. The output types
//! are what [`super::Providers::complete_validated`] parses replies into.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{SpatialRefCategory, TemporalRefCategory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptTemplateId {
    Stage1Parse,
    Stage2Temporal,
    Stage2Transcript,
    Stage2Video,
    Stage3SpatialRefine,
    Stage4Params,
    Stage4TextContent,
    Stage4ImageQuery,
}

impl PromptTemplateId {
    pub const ALL: [PromptTemplateId; 8] = [
        PromptTemplateId::Stage1Parse,
        PromptTemplateId::Stage2Temporal,
        PromptTemplateId::Stage2Transcript,
        PromptTemplateId::Stage2Video,
        PromptTemplateId::Stage3SpatialRefine,
        PromptTemplateId::Stage4Params,
        PromptTemplateId::Stage4TextContent,
        PromptTemplateId::Stage4ImageQuery,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PromptTemplateId::Stage1Parse => "stage1_parse",
            PromptTemplateId::Stage2Temporal => "stage2_temporal",
            PromptTemplateId::Stage2Transcript => "stage2_transcript",
            PromptTemplateId::Stage2Video => "stage2_video",
            PromptTemplateId::Stage3SpatialRefine => "stage3_spatial_refine",
            PromptTemplateId::Stage4Params => "stage4_params",
            PromptTemplateId::Stage4TextContent => "stage4_text_content",
            PromptTemplateId::Stage4ImageQuery => "stage4_image_query",
        }
    }

    /// Instruction text for the model, including the output format.
    pub fn instructions(&self) -> &'static str {
        match self {
            PromptTemplateId::Stage1Parse => STAGE1_PARSE,
            PromptTemplateId::Stage2Temporal => STAGE2_TEMPORAL,
            PromptTemplateId::Stage2Transcript => STAGE2_TRANSCRIPT,
            PromptTemplateId::Stage2Video => STAGE2_VIDEO,
            PromptTemplateId::Stage3SpatialRefine => STAGE3_REFINE,
            PromptTemplateId::Stage4Params => STAGE4_PARAMS,
            PromptTemplateId::Stage4TextContent => STAGE4_TEXT,
            PromptTemplateId::Stage4ImageQuery => STAGE4_IMAGE,
        }
    }
}

impl fmt::Display for PromptTemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const STAGE1_PARSE: &str = r#"You are a video editor's assistant who interprets a natural language edit command in the context of a video. Work step by step.

Step 1: List the edit operations the command refers to.
- Choose only among "text", "image", "shape", "blur", "cut", "crop", "zoom".
- Every listed operation must be one of the above.
- If none is directly relevant, give the single most relevant one (e.g. "highlight" -> "shape" with shape type "star").

Step 2: Extract references from the command. If a reference contains a noun-reference such as "this", "that" or "it", replace it with the noun it refers to, and return the rewritten command as "resolved_command".
1. Temporal references: anything that could identify a segment of the video (explicit timecodes or ranges, explicit or implicit mentions of the transcript, actions happening in the video, visual descriptions of objects, moments or frames).
2. Spatial references: anything that could identify a location or region in the frame (positions relative to the frame, specific objects or areas of interest).
3. Operation references: the words that indicate each edit operation.
4. Parameter references, per identified operation: text -> content, font style, font color or font size; image -> visual keywords; shape -> type of shape; blur -> degree of blur; cut -> none; crop -> how much to crop; zoom -> duration of the zoom animation.

Step 3-1: Classify each temporal reference:
- "position": a timecode ("54:43", "0:23"), a time range ("0:00-12:30", "from 43:30 to 44:20") or an abstract position ("intro", "ending", "beginning part of the video");
- "transcript": an implicit or explicit reference to the transcript;
- "video": a reference to an action in the video or a visual description of the frame, an object or an element;
- "other": any other temporal information.

Step 3-2: Classify each spatial reference:
- "visual-dependent": specific objects, elements or regions whose location depends on the visual content;
- "independent": locations or positions relative to the frame, independent of the visual content;
- "other": any other spatial information.

Step 4: Reply with only this JSON. Every reference "text" must be copied verbatim from resolved_command.
{"operations": ["text"], "resolved_command": "...", "references": {"temporal": [{"text": "...", "category": "position|transcript|video|other"}], "spatial": [{"text": "...", "category": "visual-dependent|independent|other"}], "operations": ["..."], "parameters": {"text": ["..."]}}}"#;

const STAGE2_TEMPORAL: &str = r#"You are a video editor's assistant who interprets a natural language temporal reference to a video. Work step by step.

First, identify the type of the reference: a timecode (a specific time), a time range, or a higher-level reference to a generic part of the video (introduction, ending, ...).
Second, determine the timecode or time range using the command context and the video duration (seconds).
Note 1: If the reference is a single timecode, output any 10 second interval containing it.
Note 2: If several segments match, output all of them.
A "hint" may contain a default interpretation; refine it if the command suggests otherwise.

Reply with only this JSON, times in seconds:
{"segments": [{"start_s": 0, "end_s": 10, "explanation": "..."}]}"#;

const STAGE2_TRANSCRIPT: &str = r#"You are a video editor's assistant who interprets the editor's reference to part of a video, given the original command and the most relevant snippets of the video's transcript.

Locate the snippets relevant to the editor's reference and its original command context. Return the index of each relevant snippet from the provided list with a short explanation of how it is relevant.
Note 1: If no snippet is relevant, return an empty array [].
Note 2: If several snippets are relevant, return all of them.

Reply with only a JSON array:
[{"index": 0, "explanation": "..."}]"#;

const STAGE2_VIDEO: &str = r#"You are a video editor's assistant who interprets the editor's reference to part of a video, given the original command and visual descriptions of the most relevant 10-second clips. A clip description has an action label (the main action), an abstract caption (an abstract description of the clip) and dense captions (descriptions of the objects present). Take all of them into account.

Locate the descriptions relevant to the editor's reference and its original command context. Return the index of each relevant description from the provided list with a short explanation of how it is relevant.
Note 1: If no description is relevant, return an empty array [].
Note 2: If several descriptions are relevant, return all of them.

Reply with only a JSON array:
[{"index": 0, "explanation": "..."}]"#;

const STAGE3_REFINE: &str = r#"You are a video editor's assistant who interprets the editor's description of a location within the frame. The description is relative to a rectangle already in the frame; refine its location and resize it if necessary.
You are given the initial rectangle (x, y, width, height in pixels, (x, y) being the top-left corner), the spatial description, the original command, and the frame boundaries (e.g. width=1280, height=720). Work step by step:
1. Refine the position (x, y) according to the description, the command and the frame boundaries, without exceeding the boundaries.
2. Resize (width, height) according to the description, the command and the frame boundaries, without exceeding the boundaries.

Reply with only this JSON, in pixels:
{"x": 0, "y": 0, "width": 100, "height": 100}"#;

const STAGE4_PARAMS: &str = r#"You are a video editor's assistant who interprets parameter change requests for a video edit. You are given the parameter reference from the editor's command, the original command and the initial parameter values. Work step by step.

Step 1: Classify each requested parameter change:
1. "explicit": an explicit value (e.g. 12px, 10%, "Introduction");
2. "relative": a change relative to the current value (e.g. 5 seconds longer, 10% less);
3. "abstract": a change without a value (e.g. shorter, longer, more, less, bigger).
Step 2: Express each change against the initial parameters.

Field names: any key of "initial_parameters", plus "duration" (seconds, length of the edit).
Reply with only this JSON:
{"changes": [{"field": "font_size", "kind": "explicit", "value": 12}, {"field": "duration", "kind": "relative", "delta": 5}, {"field": "degree", "kind": "relative", "factor": 0.9}, {"field": "duration", "kind": "abstract", "direction": "decrease"}]}"#;

const STAGE4_TEXT: &str = r#"You are a video editor's assistant who decides the text to display in a video. You are given the editor's reference, the original command and relevant content from the video: transcript snippets and visual descriptions (action, abstract caption, object descriptions) of 10-second segments. Generate the text to display based on the command, its context and the relevant content.
Note 1: If no relevant text can be generated, output the command itself with reasonable formatting.
Note 2: The text is shown on screen; keep it under 100 characters.

Reply with only this JSON:
{"text": "..."}"#;

const STAGE4_IMAGE: &str = r#"You are a video editor's assistant who writes an image search query for an image to put in a video. You are given the editor's reference, the original command and relevant content from the video: transcript snippets and visual descriptions (action, abstract caption, object descriptions) of 10-second segments. Generate the search query based on the command, its context and the relevant content.
Note 1: If no relevant query can be generated, output only the command.
Note 2: The editor sees the query; keep it under 100 characters.

Reply with only this JSON:
{"query": "..."}"#;

// ---------------------------------------------------------------------------
// Stage 1
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseRequest {
    pub command: String,
    pub has_sketch: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorizedRef<C> {
    pub text: String,
    pub category: C,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParseReferences {
    #[serde(default)]
    pub temporal: Vec<CategorizedRef<TemporalRefCategory>>,
    #[serde(default)]
    pub spatial: Vec<CategorizedRef<SpatialRefCategory>>,
    #[serde(default)]
    pub operations: Vec<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseOutput {
    pub operations: Vec<String>,
    #[serde(default)]
    pub resolved_command: Option<String>,
    #[serde(default)]
    pub references: ParseReferences,
}

// ---------------------------------------------------------------------------
// Stage 2
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionRequest {
    pub reference: String,
    pub command: String,
    pub duration_s: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hint: Vec<SegmentOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentOut {
    pub start_s: f64,
    pub end_s: f64,
    #[serde(default)]
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionOutput {
    pub segments: Vec<SegmentOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedSnippet {
    pub index: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnippetRequest {
    pub reference: String,
    pub command: String,
    pub snippets: Vec<IndexedSnippet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedClip {
    pub index: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub action_label: String,
    pub abstract_caption: String,
    pub dense_captions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipRequest {
    pub reference: String,
    pub command: String,
    pub descriptions: Vec<IndexedClip>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchItem {
    pub index: usize,
    #[serde(default)]
    pub explanation: String,
}

// ---------------------------------------------------------------------------
// Stage 3
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelBox {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineRequest {
    pub reference: String,
    pub command: String,
    pub initial: PixelBox,
    pub frame: FrameBounds,
}

// ---------------------------------------------------------------------------
// Stage 4
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsRequest {
    pub operation: String,
    pub reference: String,
    pub command: String,
    pub initial_parameters: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increase,
    Decrease,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamChangeOut {
    pub field: String,
    pub kind: crate::model::ParamChangeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsOutput {
    pub changes: Vec<ParamChangeOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentRequest {
    pub reference: String,
    pub command: String,
    pub relevant_content: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextContentOutput {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageQueryOutput {
    pub query: String,
}
