//! Shared vocabulary: time intervals, normalized frame rectangles, edit
//! operations with their parameter schemas, reference categories and
//! embeddings.
//!
//! Every type here is an immutable value. Constructors validate, so a value
//! that exists is a value that satisfies its invariants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack used when checking `x + w <= 1` style bounds on floats.
pub const BOUNDS_EPS: f64 = 1e-9;

/// Maximum length (in characters) of generated text content and image queries.
pub const MAX_GENERATED_CHARS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid interval [{start}, {end}): {reason}")]
    InvalidInterval {
        start: f64,
        end: f64,
        reason: &'static str,
    },
    #[error("invalid rect ({x}, {y}, {w}, {h}): {reason}")]
    InvalidRect {
        x: f64,
        y: f64,
        w: f64,
        h: f64,
        reason: &'static str,
    },
    #[error("invalid frame dimensions {width}x{height}")]
    InvalidDims { width: u32, height: u32 },
    #[error("unknown edit operation {0:?}")]
    UnknownOperation(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(&'static str),
}

// ---------------------------------------------------------------------------
// Time
// ---------------------------------------------------------------------------

/// A half-open span of video time `[start_s, end_s)` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInterval")]
pub struct TimeInterval {
    start_s: f64,
    end_s: f64,
}

#[derive(Deserialize)]
struct RawInterval {
    start_s: f64,
    end_s: f64,
}

impl TryFrom<RawInterval> for TimeInterval {
    type Error = ModelError;

    fn try_from(raw: RawInterval) -> Result<Self, Self::Error> {
        TimeInterval::new(raw.start_s, raw.end_s)
    }
}

impl TimeInterval {
    pub fn new(start_s: f64, end_s: f64) -> Result<Self, ModelError> {
        let err = |reason| ModelError::InvalidInterval {
            start: start_s,
            end: end_s,
            reason,
        };
        if !start_s.is_finite() || !end_s.is_finite() {
            return Err(err("non-finite bound"));
        }
        if start_s < 0.0 {
            return Err(err("start is negative"));
        }
        if start_s >= end_s {
            return Err(err("start must be before end"));
        }
        Ok(Self { start_s, end_s })
    }

    pub fn start_s(&self) -> f64 {
        self.start_s
    }

    pub fn end_s(&self) -> f64 {
        self.end_s
    }

    pub fn length_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn midpoint_s(&self) -> f64 {
        (self.start_s + self.end_s) / 2.0
    }

    /// True iff the two half-open intervals share a sub-interval of positive
    /// length. Touching endpoints do not count.
    pub fn intersects(&self, other: &TimeInterval) -> bool {
        self.start_s.max(other.start_s) < self.end_s.min(other.end_s)
    }

    /// Gap between the nearest endpoints, zero when intersecting.
    pub fn distance(&self, other: &TimeInterval) -> f64 {
        if self.intersects(other) {
            return 0.0;
        }
        (self.start_s.max(other.start_s) - self.end_s.min(other.end_s)).max(0.0)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start_s <= t && t < self.end_s
    }

    /// Whether `self` lies fully inside `outer`.
    pub fn within(&self, outer: &TimeInterval) -> bool {
        self.start_s >= outer.start_s && self.end_s <= outer.end_s
    }

    /// Intersection with `other`, or `None` when they do not intersect.
    pub fn intersection(&self, other: &TimeInterval) -> Option<TimeInterval> {
        let start = self.start_s.max(other.start_s);
        let end = self.end_s.min(other.end_s);
        TimeInterval::new(start, end).ok()
    }

    /// Fits an interval of the same length into `[0, duration_s)`: shifts it
    /// in first and truncates only if it is longer than the video.
    pub fn clamp_to(&self, duration_s: f64) -> Result<TimeInterval, ModelError> {
        shift_into(self.start_s, self.length_s(), duration_s)
    }
}

/// Places `[start, start + len)` inside `[0, duration)` keeping `len` when
/// possible.
pub(crate) fn shift_into(
    start: f64,
    len: f64,
    duration_s: f64,
) -> Result<TimeInterval, ModelError> {
    let len = len.min(duration_s);
    let mut start = start.max(0.0);
    if start + len > duration_s {
        start = duration_s - len;
    }
    TimeInterval::new(start.max(0.0), (start + len).min(duration_s))
}

/// `interval_intersects`
pub fn interval_intersects(a: &TimeInterval, b: &TimeInterval) -> bool {
    a.intersects(b)
}

/// `interval_distance`
pub fn interval_distance(a: &TimeInterval, b: &TimeInterval) -> f64 {
    a.distance(b)
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start_s, self.end_s)
    }
}

// ---------------------------------------------------------------------------
// Space
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDims")]
pub struct FrameDims {
    pub width_px: u32,
    pub height_px: u32,
}

#[derive(Deserialize)]
struct RawDims {
    width_px: u32,
    height_px: u32,
}

impl TryFrom<RawDims> for FrameDims {
    type Error = ModelError;

    fn try_from(raw: RawDims) -> Result<Self, Self::Error> {
        FrameDims::new(raw.width_px, raw.height_px)
    }
}

impl FrameDims {
    pub fn new(width_px: u32, height_px: u32) -> Result<Self, ModelError> {
        if width_px == 0 || height_px == 0 {
            return Err(ModelError::InvalidDims {
                width: width_px,
                height: height_px,
            });
        }
        Ok(Self {
            width_px,
            height_px,
        })
    }
}

/// Axis-aligned rectangle in normalized frame units, `(x, y)` at the top-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRect")]
pub struct Rect {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

#[derive(Deserialize)]
struct RawRect {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

impl TryFrom<RawRect> for Rect {
    type Error = ModelError;

    fn try_from(raw: RawRect) -> Result<Self, Self::Error> {
        Rect::new(raw.x, raw.y, raw.w, raw.h)
    }
}

/// Rectangle in integer pixels. May be out of bounds; it is only a carrier
/// between the wire or a model response and [`Rect`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelRect {
    pub x: i64,
    pub y: i64,
    pub width: i64,
    pub height: i64,
}

impl Rect {
    pub const FULL_FRAME: Rect = Rect {
        x: 0.0,
        y: 0.0,
        w: 1.0,
        h: 1.0,
    };

    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, ModelError> {
        let err = |reason| ModelError::InvalidRect { x, y, w, h, reason };
        if ![x, y, w, h].iter().all(|v| v.is_finite()) {
            return Err(err("non-finite field"));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(err("width and height must be positive"));
        }
        if x < -BOUNDS_EPS || y < -BOUNDS_EPS {
            return Err(err("origin outside the frame"));
        }
        if x + w > 1.0 + BOUNDS_EPS || y + h > 1.0 + BOUNDS_EPS {
            return Err(err("extends past the frame edge"));
        }
        Ok(Self {
            x: x.max(0.0),
            y: y.max(0.0),
            w,
            h,
        })
    }

    /// Coerces a possibly out-of-range rectangle into the frame. Each axis is
    /// translated fully into bounds first and shrunk only if still larger
    /// than the frame.
    pub fn clamp(x: f64, y: f64, w: f64, h: f64) -> Result<Self, ModelError> {
        let err = |reason| ModelError::InvalidRect { x, y, w, h, reason };
        if ![x, y, w, h].iter().all(|v| v.is_finite()) {
            return Err(err("non-finite field"));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(err("width and height must be positive"));
        }
        let (cx, cw) = clamp_axis(x, w);
        let (cy, ch) = clamp_axis(y, h);
        Rect::new(cx, cy, cw, ch)
    }

    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn intersection_area(&self, other: &Rect) -> f64 {
        let ix = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let iy = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        if ix <= 0.0 || iy <= 0.0 {
            0.0
        } else {
            ix * iy
        }
    }

    pub fn iou(&self, other: &Rect) -> f64 {
        if self == other {
            return 1.0;
        }
        let inter = self.intersection_area(other);
        if inter == 0.0 {
            return 0.0;
        }
        let union = self.area() + other.area() - inter;
        (inter / union).clamp(0.0, 1.0)
    }

    /// Round-half-up conversion to pixels.
    pub fn to_pixels(&self, dims: FrameDims) -> PixelRect {
        let (fw, fh) = (dims.width_px as f64, dims.height_px as f64);
        PixelRect {
            x: round_half_up(self.x * fw),
            y: round_half_up(self.y * fh),
            width: round_half_up(self.w * fw),
            height: round_half_up(self.h * fh),
        }
    }

    /// Exact inverse of [`Rect::to_pixels`] for in-bounds pixel rectangles.
    pub fn from_pixels(p: PixelRect, dims: FrameDims) -> Result<Self, ModelError> {
        let (fw, fh) = (dims.width_px as f64, dims.height_px as f64);
        Rect::new(
            p.x as f64 / fw,
            p.y as f64 / fh,
            p.width as f64 / fw,
            p.height as f64 / fh,
        )
    }

    /// Like [`Rect::from_pixels`] but clamps out-of-bounds input.
    pub fn clamp_from_pixels(p: PixelRect, dims: FrameDims) -> Result<Self, ModelError> {
        let (fw, fh) = (dims.width_px as f64, dims.height_px as f64);
        Rect::clamp(
            p.x as f64 / fw,
            p.y as f64 / fh,
            p.width as f64 / fw,
            p.height as f64 / fh,
        )
    }
}

fn clamp_axis(pos: f64, size: f64) -> (f64, f64) {
    if size >= 1.0 {
        return (0.0, 1.0);
    }
    let mut pos = pos.max(0.0);
    if pos + size > 1.0 {
        pos = 1.0 - size;
    }
    (pos, size)
}

fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

/// `rect_iou`
pub fn rect_iou(a: &Rect, b: &Rect) -> f64 {
    a.iou(b)
}

/// `rect_clamp`
pub fn rect_clamp(x: f64, y: f64, w: f64, h: f64) -> Result<Rect, ModelError> {
    Rect::clamp(x, y, w, h)
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({:.4}, {:.4}, {:.4}, {:.4})",
            self.x, self.y, self.w, self.h
        )
    }
}

// ---------------------------------------------------------------------------
// Operations and parameters
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOperation {
    Text,
    Image,
    Shape,
    Blur,
    Cut,
    Crop,
    Zoom,
}

impl EditOperation {
    pub const ALL: [EditOperation; 7] = [
        EditOperation::Text,
        EditOperation::Image,
        EditOperation::Shape,
        EditOperation::Blur,
        EditOperation::Cut,
        EditOperation::Crop,
        EditOperation::Zoom,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EditOperation::Text => "text",
            EditOperation::Image => "image",
            EditOperation::Shape => "shape",
            EditOperation::Blur => "blur",
            EditOperation::Cut => "cut",
            EditOperation::Crop => "crop",
            EditOperation::Zoom => "zoom",
        }
    }
}

impl fmt::Display for EditOperation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EditOperation {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let needle = s.trim().to_ascii_lowercase();
        EditOperation::ALL
            .into_iter()
            .find(|op| op.as_str() == needle)
            .ok_or_else(|| ModelError::UnknownOperation(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Circle,
    Rectangle,
    Star,
}

impl FromStr for ShapeKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "circle" | "oval" | "ellipse" => Ok(ShapeKind::Circle),
            "rectangle" | "rect" | "box" | "square" => Ok(ShapeKind::Rectangle),
            "star" => Ok(ShapeKind::Star),
            other => Err(ModelError::InvalidParameters(format!(
                "unknown shape kind {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextParams {
    pub content: String,
    pub font_style: String,
    pub font_color: String,
    /// Pixels.
    pub font_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageParams {
    pub visual_keywords: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_uri: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    pub kind: ShapeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlurParams {
    /// Normalized strength in `(0, 1]`.
    pub degree: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropParams {
    /// Region of the frame that is kept.
    pub crop_rect: Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoomParams {
    pub animation_duration_s: f64,
}

/// Parameters of an edit, one variant per [`EditOperation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "operation", rename_all = "lowercase")]
pub enum EditParameters {
    Text(TextParams),
    Image(ImageParams),
    Shape(ShapeParams),
    Blur(BlurParams),
    Cut,
    Crop(CropParams),
    Zoom(ZoomParams),
}

impl EditParameters {
    pub fn operation(&self) -> EditOperation {
        match self {
            EditParameters::Text(_) => EditOperation::Text,
            EditParameters::Image(_) => EditOperation::Image,
            EditParameters::Shape(_) => EditOperation::Shape,
            EditParameters::Blur(_) => EditOperation::Blur,
            EditParameters::Cut => EditOperation::Cut,
            EditParameters::Crop(_) => EditOperation::Crop,
            EditParameters::Zoom(_) => EditOperation::Zoom,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidParameters(msg));
        match self {
            EditParameters::Text(p) => {
                if p.content.chars().count() > MAX_GENERATED_CHARS {
                    return bad(format!(
                        "text content exceeds {MAX_GENERATED_CHARS} characters"
                    ));
                }
                if !(p.font_size.is_finite() && p.font_size > 0.0) {
                    return bad(format!("font_size must be positive, got {}", p.font_size));
                }
            }
            EditParameters::Image(p) => {
                if p.visual_keywords.chars().count() > MAX_GENERATED_CHARS {
                    return bad(format!(
                        "visual_keywords exceed {MAX_GENERATED_CHARS} characters"
                    ));
                }
            }
            EditParameters::Blur(p) => {
                if !(p.degree > 0.0 && p.degree <= 1.0) {
                    return bad(format!("blur degree must be in (0, 1], got {}", p.degree));
                }
            }
            EditParameters::Zoom(p) => {
                if !(p.animation_duration_s.is_finite() && p.animation_duration_s > 0.0) {
                    return bad(format!(
                        "animation_duration_s must be positive, got {}",
                        p.animation_duration_s
                    ));
                }
            }
            EditParameters::Shape(_) | EditParameters::Cut | EditParameters::Crop(_) => {}
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Reference categories
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemporalRefCategory {
    Position,
    Transcript,
    Video,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialRefCategory {
    #[serde(alias = "visual-dependent")]
    VisualDependent,
    Independent,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamChangeKind {
    Explicit,
    Relative,
    Abstract,
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Embedding {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = ModelError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Embedding::new(values)
    }
}

impl From<Embedding> for Vec<f64> {
    fn from(e: Embedding) -> Self {
        e.values
    }
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if values.is_empty() {
            return Err(ModelError::InvalidEmbedding("empty vector"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidEmbedding("non-finite entry"));
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Unit-length copy. Fails on the zero vector.
    pub fn normalized(&self) -> Result<Embedding, ModelError> {
        let n = self.norm();
        if n == 0.0 {
            return Err(ModelError::InvalidEmbedding("zero vector"));
        }
        Ok(Embedding {
            values: self.values.iter().map(|v| v / n).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(a: f64, b: f64) -> TimeInterval {
        TimeInterval::new(a, b).unwrap()
    }

    fn r(x: f64, y: f64, w: f64, h: f64) -> Rect {
        Rect::new(x, y, w, h).unwrap()
    }

    #[test]
    fn intersects_examples() {
        assert!(interval_intersects(&iv(10.0, 20.0), &iv(15.0, 25.0)));
        assert!(!interval_intersects(&iv(10.0, 20.0), &iv(20.0, 30.0)));
        assert!(interval_intersects(&iv(0.0, 5.0), &iv(0.0, 5.0)));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(interval_distance(&iv(10.0, 20.0), &iv(25.0, 35.0)), 5.0);
        assert_eq!(interval_distance(&iv(10.0, 20.0), &iv(15.0, 25.0)), 0.0);
        assert_eq!(interval_distance(&iv(0.0, 10.0), &iv(15.0, 25.0)), 5.0);
        assert_eq!(interval_distance(&iv(10.0, 20.0), &iv(20.0, 30.0)), 0.0);
    }

    #[test]
    fn interval_rejects_bad_bounds() {
        assert!(TimeInterval::new(5.0, 5.0).is_err());
        assert!(TimeInterval::new(-1.0, 5.0).is_err());
        assert!(TimeInterval::new(0.0, f64::NAN).is_err());
        assert!(serde_json::from_str::<TimeInterval>(r#"{"start_s":3,"end_s":1}"#).is_err());
    }

    #[test]
    fn iou_examples() {
        let a = r(0.0, 0.0, 0.5, 0.5);
        assert_eq!(rect_iou(&a, &a), 1.0);
        assert_eq!(rect_iou(&a, &r(0.6, 0.6, 0.2, 0.2)), 0.0);
        let b = r(0.25, 0.0, 0.5, 0.5);
        // inter = 0.25 * 0.5 = 0.125, union = 0.25 + 0.25 - 0.125 = 0.375
        assert!((rect_iou(&a, &b) - 0.125 / 0.375).abs() < 1e-9);
        assert!((rect_iou(&a, &b) - 0.3333).abs() < 1e-4);
    }

    #[test]
    fn clamp_examples() {
        let c = rect_clamp(0.9, 0.9, 0.3, 0.3).unwrap();
        assert!((c.x() - 0.7).abs() < 1e-12 && (c.y() - 0.7).abs() < 1e-12);
        assert_eq!((c.w(), c.h()), (0.3, 0.3));

        let inside = r(0.1, 0.2, 0.3, 0.4);
        assert_eq!(rect_clamp(0.1, 0.2, 0.3, 0.4).unwrap(), inside);

        assert_eq!(
            rect_clamp(-0.1, 0.0, 0.5, 0.5).unwrap(),
            r(0.0, 0.0, 0.5, 0.5)
        );
        assert_eq!(
            rect_clamp(0.5, 0.5, 2.0, 0.2).unwrap(),
            r(0.0, 0.5, 1.0, 0.2)
        );
        assert!(rect_clamp(0.1, 0.1, 0.0, 0.2).is_err());
        assert!(rect_clamp(0.1, 0.1, 0.3, -0.2).is_err());
    }

    #[test]
    fn pixel_examples() {
        let hd = FrameDims::new(1280, 720).unwrap();
        assert_eq!(
            Rect::FULL_FRAME.to_pixels(hd),
            PixelRect {
                x: 0,
                y: 0,
                width: 1280,
                height: 720
            }
        );
        let p = r(0.5, 0.5, 0.25, 0.25).to_pixels(hd);
        assert_eq!(
            p,
            PixelRect {
                x: 640,
                y: 360,
                width: 320,
                height: 180
            }
        );
        assert_eq!(Rect::from_pixels(p, hd).unwrap(), r(0.5, 0.5, 0.25, 0.25));
    }

    #[test]
    fn operation_names_round_trip() {
        for op in EditOperation::ALL {
            assert_eq!(op.as_str().parse::<EditOperation>().unwrap(), op);
            let json = serde_json::to_string(&op).unwrap();
            assert_eq!(json, format!("\"{}\"", op.as_str()));
        }
        assert!("sticker".parse::<EditOperation>().is_err());
    }

    #[test]
    fn parameter_variant_and_caps() {
        let cut: EditParameters = serde_json::from_str(r#"{"operation":"cut"}"#).unwrap();
        assert_eq!(cut.operation(), EditOperation::Cut);

        let long = EditParameters::Text(TextParams {
            content: "x".repeat(101),
            font_style: String::new(),
            font_color: "white".into(),
            font_size: 36.0,
        });
        assert!(long.validate().is_err());
        assert!(EditParameters::Blur(BlurParams { degree: 0.0 })
            .validate()
            .is_err());
        assert!(EditParameters::Blur(BlurParams { degree: 1.0 })
            .validate()
            .is_ok());
    }

    #[test]
    fn spatial_category_accepts_hyphen_alias() {
        let c: SpatialRefCategory = serde_json::from_str("\"visual-dependent\"").unwrap();
        assert_eq!(c, SpatialRefCategory::VisualDependent);
        assert_eq!(serde_json::to_string(&c).unwrap(), "\"visual_dependent\"");
    }

    fn arb_interval() -> impl Strategy<Value = TimeInterval> {
        (0.0f64..100.0, 0.01f64..50.0).prop_map(|(s, len)| iv(s, s + len))
    }

    fn arb_rect() -> impl Strategy<Value = Rect> {
        (0.0f64..0.95, 0.0f64..0.95, 0.01f64..1.0, 0.01f64..1.0)
            .prop_map(|(x, y, w, h)| r(x, y, w.min(1.0 - x), h.min(1.0 - y)))
    }

    proptest! {
        #[test]
        fn interval_relations_symmetric(a in arb_interval(), b in arb_interval()) {
            prop_assert_eq!(a.intersects(&b), b.intersects(&a));
            prop_assert_eq!(a.distance(&b), b.distance(&a));
            prop_assert_eq!(a.distance(&b) == 0.0, a.intersects(&b) || a.end_s() == b.start_s() || b.end_s() == a.start_s());
        }

        #[test]
        fn iou_bounded_and_symmetric(a in arb_rect(), b in arb_rect()) {
            let v = a.iou(&b);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, b.iou(&a));
            prop_assert_eq!(a.iou(&a), 1.0);
        }

        #[test]
        fn clamp_is_idempotent(x in -2.0f64..2.0, y in -2.0f64..2.0, w in 0.01f64..2.0, h in 0.01f64..2.0) {
            let once = Rect::clamp(x, y, w, h).unwrap();
            let twice = Rect::clamp(once.x(), once.y(), once.w(), once.h()).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn pixel_round_trip_within_one_pixel(rect in arb_rect(), w in 16u32..4000, h in 16u32..4000) {
            let dims = FrameDims::new(w, h).unwrap();
            let px = rect.to_pixels(dims);
            // Rounding may push a sliver rect to 0 px or past the edge; only
            // the coordinate error is under test here.
            let back = [px.x as f64 / w as f64, px.y as f64 / h as f64, px.width as f64 / w as f64, px.height as f64 / h as f64];
            let tol = 1.0 / w.min(h) as f64;
            for (got, want) in back.iter().zip([rect.x(), rect.y(), rect.w(), rect.h()]) {
                prop_assert!((got - want).abs() <= tol);
            }
        }
    }
}
