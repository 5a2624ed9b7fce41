//! Rule-based stand-in for the language model.
//!
//! Answers every template from keywords, the timecode grammar and simple
//! word overlap. Good enough to drive the pipeline end to end without a
//! network; not a substitute for a real model.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde_json::{json, Value};

use super::templates::{
    ClipRequest, ContentRequest, MatchItem, ParamsRequest, ParseRequest, PixelBox, PositionRequest,
    RefineRequest, SnippetRequest,
};
use super::{ChatRequest, PromptTemplateId, ProviderError};
use crate::model::{EditOperation, MAX_GENERATED_CHARS};
use crate::timecode::{scan_positions, PositionKind};

const OP_KEYWORDS: &[(&str, EditOperation)] = &[
    ("text", EditOperation::Text),
    ("texts", EditOperation::Text),
    ("caption", EditOperation::Text),
    ("captions", EditOperation::Text),
    ("title", EditOperation::Text),
    ("subtitle", EditOperation::Text),
    ("subtitles", EditOperation::Text),
    ("label", EditOperation::Text),
    ("image", EditOperation::Image),
    ("images", EditOperation::Image),
    ("picture", EditOperation::Image),
    ("pictures", EditOperation::Image),
    ("photo", EditOperation::Image),
    ("photos", EditOperation::Image),
    ("logo", EditOperation::Image),
    ("sticker", EditOperation::Image),
    ("shape", EditOperation::Shape),
    ("circle", EditOperation::Shape),
    ("circles", EditOperation::Shape),
    ("rectangle", EditOperation::Shape),
    ("oval", EditOperation::Shape),
    ("star", EditOperation::Shape),
    ("stars", EditOperation::Shape),
    ("highlight", EditOperation::Shape),
    ("blur", EditOperation::Blur),
    ("blurs", EditOperation::Blur),
    ("blurred", EditOperation::Blur),
    ("blurring", EditOperation::Blur),
    ("pixelate", EditOperation::Blur),
    ("censor", EditOperation::Blur),
    ("cut", EditOperation::Cut),
    ("cuts", EditOperation::Cut),
    ("trim", EditOperation::Cut),
    ("delete", EditOperation::Cut),
    ("crop", EditOperation::Crop),
    ("crops", EditOperation::Crop),
    ("cropped", EditOperation::Crop),
    ("cropping", EditOperation::Crop),
    ("zoom", EditOperation::Zoom),
    ("zooms", EditOperation::Zoom),
    ("zoomed", EditOperation::Zoom),
    ("zooming", EditOperation::Zoom),
    ("magnify", EditOperation::Zoom),
];

const STOPWORDS: &[&str] = &[
    "a",
    "an",
    "the",
    "and",
    "or",
    "of",
    "to",
    "in",
    "on",
    "at",
    "for",
    "with",
    "by",
    "from",
    "is",
    "are",
    "be",
    "it",
    "this",
    "that",
    "these",
    "those",
    "there",
    "here",
    "when",
    "whenever",
    "while",
    "during",
    "every",
    "time",
    "times",
    "each",
    "where",
    "what",
    "which",
    "who",
    "he",
    "she",
    "they",
    "i",
    "me",
    "my",
    "we",
    "you",
    "your",
    "his",
    "her",
    "their",
    "its",
    "add",
    "put",
    "place",
    "make",
    "show",
    "insert",
    "please",
    "some",
    "all",
    "any",
    "about",
    "mention",
    "mentions",
    "mentioned",
    "say",
    "says",
    "said",
    "talk",
    "talks",
    "talking",
    "discuss",
    "discusses",
    "speak",
    "speaks",
    "video",
    "part",
    "parts",
    "moment",
    "moments",
    "something",
    "like",
    "just",
    "also",
    "then",
    "so",
    "as",
    "up",
    "out",
    "over",
    "around",
    "near",
    "into",
    "screen",
    "frame",
    "appears",
    "appear",
    "shows",
    "shown",
    "do",
    "does",
    "is",
    "was",
    "were",
    "being",
];

const TRANSCRIPT_CUES: &[&str] = &[
    "mention",
    "mentions",
    "mentioned",
    "say",
    "says",
    "said",
    "talk",
    "talks",
    "talking",
    "discuss",
    "discusses",
    "discussing",
    "speak",
    "speaks",
    "speaking",
    "explain",
    "explains",
    "word",
    "words",
    "quote",
];

const COLORS: &[&str] = &[
    "white", "black", "red", "green", "blue", "yellow", "orange", "purple", "pink", "gray", "grey",
    "brown", "cyan", "magenta",
];

const STYLES: &[&str] = &[
    "bold",
    "italic",
    "serif",
    "sans-serif",
    "monospace",
    "handwritten",
    "underlined",
];

/// Byte spans of operation keywords in `text`, in order of appearance.
pub(crate) fn scan_operation_keywords(text: &str) -> Vec<(usize, usize, EditOperation)> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| {
        let alts: Vec<&str> = OP_KEYWORDS.iter().map(|(w, _)| *w).collect();
        Regex::new(&format!(r"(?i)\b(?:{})\b", alts.join("|"))).unwrap()
    });
    re.find_iter(text)
        .filter_map(|m| {
            let word = m.as_str().to_ascii_lowercase();
            OP_KEYWORDS
                .iter()
                .find(|(w, _)| *w == word)
                .map(|(_, op)| (m.start(), m.end(), *op))
        })
        .collect()
}

fn stem(word: &str) -> String {
    let w = word.to_ascii_lowercase();
    if w.len() > 3 && w.ends_with('s') && !w.ends_with("ss") {
        w[..w.len() - 1].to_string()
    } else {
        w
    }
}

/// Lowercased, lightly stemmed words that carry meaning.
pub(crate) fn content_words(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric() && c != '\'')
        .map(|w| w.trim_matches('\''))
        .filter(|w| !w.is_empty())
        .filter(|w| !STOPWORDS.contains(&w.to_ascii_lowercase().as_str()))
        .filter(|w| !OP_KEYWORDS.iter().any(|(k, _)| k.eq_ignore_ascii_case(w)))
        .map(stem)
        .collect()
}

fn has_word(text: &str, words: &[&str]) -> bool {
    text.split(|c: char| !c.is_alphanumeric() && c != '-')
        .any(|w| words.iter().any(|k| k.eq_ignore_ascii_case(w)))
}

/// Clause boundaries: commas, semicolons and sentence ends.
fn clause_around(text: &str, start: usize, end: usize) -> (usize, usize) {
    let is_break = |c: char| matches!(c, ',' | ';' | '.' | '!' | '?');
    let mut s = text[..start].rfind(is_break).map(|i| i + 1).unwrap_or(0);
    let mut e = text[end..]
        .find(is_break)
        .map(|i| end + i)
        .unwrap_or(text.len());
    while s < start && text[s..].starts_with(char::is_whitespace) {
        s += text[s..].chars().next().unwrap().len_utf8();
    }
    while e > end && text[..e].ends_with(char::is_whitespace) {
        e -= text[..e].chars().next_back().unwrap().len_utf8();
    }
    (s, e)
}

fn overlaps(spans: &[(usize, usize)], s: usize, e: usize) -> bool {
    spans.iter().any(|&(a, b)| s < b && a < e)
}

pub(crate) fn truncate_words(text: &str, max_chars: usize) -> String {
    let text = text.trim();
    if text.chars().count() <= max_chars {
        return text.to_string();
    }
    let mut out = String::new();
    for word in text.split_whitespace() {
        let extra = if out.is_empty() { 0 } else { 1 };
        if out.chars().count() + extra + word.chars().count() > max_chars {
            break;
        }
        if extra == 1 {
            out.push(' ');
        }
        out.push_str(word);
    }
    if out.is_empty() {
        out = text.chars().take(max_chars).collect();
    }
    out
}

/// Deterministic heuristic replies for every prompt template.
#[derive(Debug, Default)]
pub struct LexicalResponder;

impl LexicalResponder {
    pub fn new() -> Self {
        Self
    }

    pub fn send(&self, req: &ChatRequest) -> Result<String, ProviderError> {
        let bad = |e: serde_json::Error| {
            ProviderError::InvalidInput(format!("{} payload: {e}", req.template))
        };
        let p = req.payload.clone();
        let reply = match req.template {
            PromptTemplateId::Stage1Parse => parse(&serde_json::from_value(p).map_err(bad)?),
            PromptTemplateId::Stage2Temporal => position(&serde_json::from_value(p).map_err(bad)?),
            PromptTemplateId::Stage2Transcript => {
                snippets(&serde_json::from_value(p).map_err(bad)?)
            }
            PromptTemplateId::Stage2Video => clips(&serde_json::from_value(p).map_err(bad)?),
            PromptTemplateId::Stage3SpatialRefine => {
                refine(&serde_json::from_value(p).map_err(bad)?)
            }
            PromptTemplateId::Stage4Params => params(&serde_json::from_value(p).map_err(bad)?),
            PromptTemplateId::Stage4TextContent => {
                text_content(&serde_json::from_value(p).map_err(bad)?)
            }
            PromptTemplateId::Stage4ImageQuery => {
                image_query(&serde_json::from_value(p).map_err(bad)?)
            }
        };
        Ok(reply.to_string())
    }
}

fn parse(req: &ParseRequest) -> Value {
    static CLAUSE: OnceLock<Regex> = OnceLock::new();
    static REGION: OnceLock<Regex> = OnceLock::new();
    static OBJECT: OnceLock<Regex> = OnceLock::new();
    let clause_re = CLAUSE.get_or_init(|| {
        Regex::new(r"(?i)\b(?:whenever|every time|each time|when|while|during)\b[^,;.!?]*").unwrap()
    });
    let region_re = REGION.get_or_init(|| {
        Regex::new(
            r"(?i)\b(?:the\s+)?(?:(?:top|bottom|upper|lower)[ -](?:left|right)(?: corner)?|(?:top|bottom|upper|lower|left|right) (?:side|half|edge|part|third)|top|bottom|center|centre|middle|corner)(?: of the (?:screen|frame|video))?\b",
        )
        .unwrap()
    });
    let object_re = OBJECT.get_or_init(|| {
        Regex::new(
            r"(?i)\b(?:around|over|covering|near|on top of|on)\s+(the\s+[a-z']+(?:\s+[a-z']+)?)",
        )
        .unwrap()
    });

    let cmd = req.command.as_str();
    let ops = scan_operation_keywords(cmd);
    let mut operations: Vec<&str> = Vec::new();
    for (_, _, op) in &ops {
        if !operations.contains(&op.as_str()) {
            operations.push(op.as_str());
        }
    }
    if operations.is_empty() {
        operations.push("text");
    }

    let mut temporal = Vec::new();
    let mut temporal_spans = Vec::new();
    for m in scan_positions(cmd) {
        temporal.push(json!({"text": &cmd[m.start..m.end], "category": "position"}));
        temporal_spans.push((m.start, m.end));
    }
    for m in clause_re.find_iter(cmd) {
        let text = m.as_str().trim_end();
        let (s, e) = (m.start(), m.start() + text.len());
        if text.split_whitespace().count() < 2 || overlaps(&temporal_spans, s, e) {
            continue;
        }
        let category = if has_word(text, TRANSCRIPT_CUES) {
            "transcript"
        } else {
            "video"
        };
        temporal.push(json!({"text": text, "category": category}));
        temporal_spans.push((s, e));
    }

    let mut spatial = Vec::new();
    let mut spatial_spans: Vec<(usize, usize)> = Vec::new();
    for m in region_re.find_iter(cmd) {
        if overlaps(&temporal_spans, m.start(), m.end()) {
            continue;
        }
        spatial.push(json!({"text": m.as_str(), "category": "independent"}));
        spatial_spans.push((m.start(), m.end()));
    }
    for caps in object_re.captures_iter(cmd) {
        let g = caps.get(1).unwrap();
        // Trim trailing function words the two-word window may have caught.
        let mut words: Vec<&str> = g.as_str().split_whitespace().collect();
        while words.len() > 2
            && STOPWORDS.contains(&words.last().unwrap().to_ascii_lowercase().as_str())
        {
            words.pop();
        }
        let text = words.join(" ");
        let (s, e) = (g.start(), g.start() + text.len());
        let noun = words
            .last()
            .map(|w| w.to_ascii_lowercase())
            .unwrap_or_default();
        if words.len() < 2
            || STOPWORDS.contains(&noun.as_str())
            || matches!(
                noun.as_str(),
                "screen" | "frame" | "video" | "left" | "right" | "top" | "bottom"
            )
            || cmd[s..e] != text
            || overlaps(&temporal_spans, s, e)
            || overlaps(&spatial_spans, s, e)
        {
            continue;
        }
        spatial.push(json!({"text": text, "category": "visual_dependent"}));
        spatial_spans.push((s, e));
    }

    let mut op_texts = Vec::new();
    let mut parameters = serde_json::Map::new();
    for (s, e, op) in &ops {
        op_texts.push(Value::String(cmd[*s..*e].to_string()));
        let (cs, ce) = clause_around(cmd, *s, *e);
        let entry = parameters.entry(op.as_str()).or_insert_with(|| json!([]));
        let clause = Value::String(cmd[cs..ce].to_string());
        if !entry.as_array().unwrap().contains(&clause) {
            entry.as_array_mut().unwrap().push(clause);
        }
    }

    json!({
        "operations": operations,
        "resolved_command": cmd,
        "references": {
            "temporal": temporal,
            "spatial": spatial,
            "operations": op_texts,
            "parameters": parameters,
        }
    })
}

fn position(req: &PositionRequest) -> Value {
    let mut segments = Vec::new();
    for m in scan_positions(&req.reference) {
        let d = req.duration_s;
        let (s, e) = match m.kind {
            PositionKind::Timecode(t) if t < d => ((t - 5.0).max(0.0), (t + 5.0).min(d)),
            PositionKind::Range(a, b) if a < b && a < d => (a, b.min(d)),
            PositionKind::Start => (0.0, d.min(60.0)),
            PositionKind::End => ((d - 60.0).max(0.0), d),
            _ => continue,
        };
        segments.push(json!({"start_s": s, "end_s": e, "explanation": "read from the reference"}));
    }
    if segments.is_empty() {
        for h in &req.hint {
            segments.push(
                json!({"start_s": h.start_s, "end_s": h.end_s, "explanation": h.explanation}),
            );
        }
    }
    json!({ "segments": segments })
}

fn overlap_matches<'a>(reference: &str, items: impl Iterator<Item = (usize, &'a str)>) -> Value {
    let wanted = content_words(reference);
    let found: Vec<MatchItem> = items
        .filter_map(|(index, text)| {
            let shared: Vec<String> = content_words(text).intersection(&wanted).cloned().collect();
            (!shared.is_empty()).then(|| MatchItem {
                index,
                explanation: format!("mentions {}", shared.join(", ")),
            })
        })
        .collect();
    serde_json::to_value(found).unwrap()
}

fn snippets(req: &SnippetRequest) -> Value {
    overlap_matches(
        &req.reference,
        req.snippets.iter().map(|s| (s.index, s.text.as_str())),
    )
}

fn clips(req: &ClipRequest) -> Value {
    let texts: Vec<(usize, String)> = req
        .descriptions
        .iter()
        .map(|c| {
            (
                c.index,
                format!(
                    "{}; {}; {}",
                    c.action_label,
                    c.abstract_caption,
                    c.dense_captions.join("; ")
                ),
            )
        })
        .collect();
    overlap_matches(&req.reference, texts.iter().map(|(i, t)| (*i, t.as_str())))
}

fn refine(req: &RefineRequest) -> Value {
    let r = req.reference.to_ascii_lowercase();
    let fw = req.frame.width as f64;
    let fh = req.frame.height as f64;
    let PixelBox {
        mut x,
        mut y,
        mut width,
        mut height,
    } = req.initial;
    let scale = if has_word(&r, &["bigger", "larger", "wider"]) {
        1.5
    } else if has_word(&r, &["smaller", "tighter", "narrower"]) {
        2.0 / 3.0
    } else {
        1.0
    };
    let (cx, cy) = (x + width / 2.0, y + height / 2.0);
    width = (width * scale).min(fw);
    height = (height * scale).min(fh);
    x = cx - width / 2.0;
    y = cy - height / 2.0;
    if has_word(&r, &["left"]) {
        x = 0.0;
    } else if has_word(&r, &["right"]) {
        x = fw - width;
    }
    if has_word(&r, &["top", "upper", "above"]) {
        y = 0.0;
    } else if has_word(&r, &["bottom", "lower", "below"]) {
        y = fh - height;
    }
    if has_word(&r, &["center", "centre", "middle"]) && !has_word(&r, &["left", "right"]) {
        x = (fw - width) / 2.0;
    }
    x = x.clamp(0.0, fw - width);
    y = y.clamp(0.0, fh - height);
    json!({"x": x.round(), "y": y.round(), "width": width.round(), "height": height.round()})
}

fn primary_numeric_field(op: &str) -> Option<&'static str> {
    match op {
        "text" => Some("font_size"),
        "blur" => Some("degree"),
        "zoom" => Some("animation_duration_s"),
        _ => None,
    }
}

fn params(req: &ParamsRequest) -> Value {
    static PX: OnceLock<Regex> = OnceLock::new();
    static DUR_REL: OnceLock<Regex> = OnceLock::new();
    static DUR_ABS: OnceLock<Regex> = OnceLock::new();
    static PCT: OnceLock<Regex> = OnceLock::new();
    static QUOTED: OnceLock<Regex> = OnceLock::new();
    let px = PX.get_or_init(|| {
        Regex::new(r"(?i)\b(\d+(?:\.\d+)?)\s*(?:px|pt|pixels?|points?)\b").unwrap()
    });
    let dur_rel = DUR_REL.get_or_init(|| {
        Regex::new(r"(?i)\b(\d+(?:\.\d+)?)\s*(?:seconds?|secs?|s)\s+(longer|shorter)\b").unwrap()
    });
    let dur_abs = DUR_ABS.get_or_init(|| {
        Regex::new(r"(?i)\bfor\s+(\d+(?:\.\d+)?)\s*(?:seconds?|secs?|s)\b").unwrap()
    });
    let pct = PCT.get_or_init(|| {
        Regex::new(r"(?i)\b(\d+(?:\.\d+)?)\s*%\s*(more|less|bigger|smaller|larger|stronger|weaker|longer|shorter)\b")
            .unwrap()
    });
    let quoted = QUOTED.get_or_init(|| Regex::new(r#""([^"]+)"|“([^”]+)”"#).unwrap());

    let r = req.reference.as_str();
    let op = req.operation.as_str();
    let mut changes = Vec::new();

    if op == "text" {
        if let Some(c) = quoted.captures(r).or_else(|| quoted.captures(&req.command)) {
            let text = c.get(1).or_else(|| c.get(2)).unwrap().as_str();
            changes.push(json!({"field": "content", "kind": "explicit", "value": truncate_words(text, MAX_GENERATED_CHARS)}));
        }
        if let Some(c) = px.captures(r) {
            let v: f64 = c[1].parse().unwrap();
            changes.push(json!({"field": "font_size", "kind": "explicit", "value": v}));
        }
        if let Some(color) = COLORS.iter().find(|c| has_word(r, &[c])) {
            changes.push(json!({"field": "font_color", "kind": "explicit", "value": color}));
        }
        if let Some(style) = STYLES.iter().find(|s| has_word(r, &[s])) {
            changes.push(json!({"field": "font_style", "kind": "explicit", "value": style}));
        }
    }
    if op == "shape" {
        let lower = r.to_ascii_lowercase();
        let kind = if has_word(&lower, &["circle", "circles", "oval", "ellipse"]) {
            Some("circle")
        } else if has_word(&lower, &["rectangle", "box", "square"]) {
            Some("rectangle")
        } else if has_word(&lower, &["star", "stars", "highlight"]) {
            Some("star")
        } else {
            None
        };
        if let Some(kind) = kind {
            changes.push(json!({"field": "kind", "kind": "explicit", "value": kind}));
        }
    }

    let pct_hit = pct.captures(r);
    if let Some(c) = dur_rel.captures(r) {
        let d: f64 = c[1].parse().unwrap();
        let sign = if c[2].eq_ignore_ascii_case("longer") {
            1.0
        } else {
            -1.0
        };
        changes.push(json!({"field": "duration", "kind": "relative", "delta": sign * d}));
    } else if let Some(c) = dur_abs.captures(r) {
        let d: f64 = c[1].parse().unwrap();
        let field = if op == "zoom" {
            "animation_duration_s"
        } else {
            "duration"
        };
        changes.push(json!({"field": field, "kind": "explicit", "value": d}));
    } else if let Some(c) = &pct_hit {
        let word = c[2].to_ascii_lowercase();
        let up = matches!(
            word.as_str(),
            "more" | "bigger" | "larger" | "stronger" | "longer"
        );
        let p: f64 = c[1].parse().unwrap();
        let factor = if up { 1.0 + p / 100.0 } else { 1.0 - p / 100.0 };
        let field = if matches!(word.as_str(), "longer" | "shorter") && op != "zoom" {
            Some("duration")
        } else {
            primary_numeric_field(op)
        };
        if let Some(field) = field {
            changes.push(json!({"field": field, "kind": "relative", "factor": factor}));
        }
    } else {
        let lower = r.to_ascii_lowercase();
        if has_word(&lower, &["longer"]) {
            changes.push(json!({"field": "duration", "kind": "abstract", "direction": "increase"}));
        } else if has_word(&lower, &["shorter"]) {
            changes.push(json!({"field": "duration", "kind": "abstract", "direction": "decrease"}));
        }
        let up = has_word(
            &lower,
            &["bigger", "larger", "more", "stronger", "heavier", "slower"],
        );
        let down = has_word(
            &lower,
            &[
                "smaller", "less", "weaker", "lighter", "faster", "subtle", "slightly",
            ],
        );
        if up != down && !(op == "text" && px.is_match(r)) {
            if let Some(field) = primary_numeric_field(op) {
                let direction = if up { "increase" } else { "decrease" };
                changes.push(json!({"field": field, "kind": "abstract", "direction": direction}));
            }
        }
    }
    json!({ "changes": changes })
}

fn text_content(req: &ContentRequest) -> Value {
    static QUOTED: OnceLock<Regex> = OnceLock::new();
    let quoted = QUOTED.get_or_init(|| Regex::new(r#""([^"]+)"|“([^”]+)”"#).unwrap());
    let text = if let Some(c) = quoted
        .captures(&req.reference)
        .or_else(|| quoted.captures(&req.command))
    {
        c.get(1).or_else(|| c.get(2)).unwrap().as_str().to_string()
    } else if let Some(first) = req.relevant_content.iter().find(|c| !c.trim().is_empty()) {
        first.clone()
    } else {
        req.command.clone()
    };
    json!({ "text": truncate_words(&text, MAX_GENERATED_CHARS) })
}

fn image_query(req: &ContentRequest) -> Value {
    let mut words: Vec<String> = Vec::new();
    for w in req
        .reference
        .split_whitespace()
        .chain(req.command.split_whitespace())
    {
        let w = w.trim_matches(|c: char| !c.is_alphanumeric());
        if w.is_empty() || w.chars().all(|c| c.is_ascii_digit() || c == ':') {
            continue;
        }
        let lower = w.to_ascii_lowercase();
        if STOPWORDS.contains(&lower.as_str()) || OP_KEYWORDS.iter().any(|(k, _)| *k == lower) {
            continue;
        }
        if !words.contains(&lower) {
            words.push(lower);
        }
    }
    let query = if words.is_empty() {
        req.command.clone()
    } else {
        words.join(" ")
    };
    json!({ "query": truncate_words(&query, MAX_GENERATED_CHARS) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::templates::{IndexedSnippet, ParseOutput};

    fn ask(template: PromptTemplateId, payload: Value) -> Value {
        let raw = LexicalResponder::new()
            .send(&ChatRequest::new(template, payload))
            .unwrap();
        serde_json::from_str(&raw).unwrap()
    }

    #[test]
    fn parse_finds_operations_and_references() {
        let v = ask(
            PromptTemplateId::Stage1Parse,
            json!({"command": "blur the top left corner from 1:00 to 1:30, and add a circle around the red mug", "has_sketch": false}),
        );
        let out: ParseOutput = serde_json::from_value(v).unwrap();
        assert_eq!(out.operations, ["blur", "shape"]);
        assert_eq!(out.references.temporal[0].text, "from 1:00 to 1:30");
        let spatial: Vec<&str> = out
            .references
            .spatial
            .iter()
            .map(|r| r.text.as_str())
            .collect();
        assert_eq!(spatial, ["the top left corner", "the red mug"]);
        assert_eq!(
            out.references.parameters["shape"],
            ["and add a circle around the red mug"]
        );
    }

    #[test]
    fn parse_scenario_command() {
        let cmd = "whenever there is a mention of advice or a tip, put it in a big white text with a transparent background on the bottom part of the frame";
        let v = ask(
            PromptTemplateId::Stage1Parse,
            json!({"command": cmd, "has_sketch": true}),
        );
        assert_eq!(v["operations"], json!(["text"]));
        assert_eq!(
            v["references"]["temporal"][0],
            json!({"text": "whenever there is a mention of advice or a tip", "category": "transcript"})
        );
        assert_eq!(
            v["references"]["spatial"][0],
            json!({"text": "the bottom part of the frame", "category": "independent"})
        );
    }

    #[test]
    fn parse_classifies_clauses() {
        let v = ask(
            PromptTemplateId::Stage1Parse,
            json!({"command": "add text whenever the speaker mentions pricing", "has_sketch": false}),
        );
        assert_eq!(v["references"]["temporal"][0]["category"], "transcript");
        let v = ask(
            PromptTemplateId::Stage1Parse,
            json!({"command": "zoom in when someone is pouring coffee", "has_sketch": false}),
        );
        assert_eq!(v["references"]["temporal"][0]["category"], "video");
        assert_eq!(v["operations"], json!(["zoom"]));
    }

    #[test]
    fn snippet_matching_uses_word_overlap() {
        let req = SnippetRequest {
            reference: "whenever he talks about pricing".into(),
            command: "add text".into(),
            snippets: vec![
                IndexedSnippet {
                    index: 0,
                    start_s: 0.0,
                    end_s: 5.0,
                    text: "Let's talk about hiring.".into(),
                },
                IndexedSnippet {
                    index: 1,
                    start_s: 5.0,
                    end_s: 10.0,
                    text: "Pricing is hard.".into(),
                },
            ],
        };
        let v = ask(
            PromptTemplateId::Stage2Transcript,
            serde_json::to_value(req).unwrap(),
        );
        assert_eq!(v.as_array().unwrap().len(), 1);
        assert_eq!(v[0]["index"], 1);
    }

    #[test]
    fn params_extraction() {
        let v = ask(
            PromptTemplateId::Stage4Params,
            json!({"operation": "text", "reference": "make the text 24px and yellow", "command": "", "initial_parameters": {}}),
        );
        assert_eq!(
            v["changes"][0],
            json!({"field": "font_size", "kind": "explicit", "value": 24.0})
        );
        assert_eq!(v["changes"][1]["value"], "yellow");
        let v = ask(
            PromptTemplateId::Stage4Params,
            json!({"operation": "blur", "reference": "blur a bit more", "command": "", "initial_parameters": {}}),
        );
        assert_eq!(
            v["changes"][0],
            json!({"field": "degree", "kind": "abstract", "direction": "increase"})
        );
        let v = ask(
            PromptTemplateId::Stage4Params,
            json!({"operation": "zoom", "reference": "5 seconds longer", "command": "", "initial_parameters": {}}),
        );
        assert_eq!(
            v["changes"][0],
            json!({"field": "duration", "kind": "relative", "delta": 5.0})
        );
    }

    #[test]
    fn generated_text_is_bounded() {
        let long = "word ".repeat(60);
        let v = ask(
            PromptTemplateId::Stage4TextContent,
            json!({"reference": "text", "command": "add text", "relevant_content": [long]}),
        );
        assert!(v["text"].as_str().unwrap().chars().count() <= MAX_GENERATED_CHARS);
        let v = ask(
            PromptTemplateId::Stage4ImageQuery,
            json!({"reference": "an image of a sunset", "command": "add an image of a sunset at 0:10", "relevant_content": []}),
        );
        assert_eq!(v["query"], "sunset");
    }

    #[test]
    fn refine_moves_toward_named_side() {
        let v = ask(
            PromptTemplateId::Stage3SpatialRefine,
            json!({"reference": "bottom right", "command": "", "initial": {"x": 0, "y": 0, "width": 100, "height": 50}, "frame": {"width": 1280, "height": 720}}),
        );
        assert_eq!(
            v,
            json!({"x": 1180.0, "y": 670.0, "width": 100.0, "height": 50.0})
        );
    }
}
