//! The per-video metadata bundle: transcript, 10-second clip descriptions and
//! per-second instance crops with embeddings.
//!
//! Bundles are produced offline by vision and captioning models; this module
//! owns the document format, its validation, and the window queries the
//! grounding stages run against it.

mod synth;

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Embedding, FrameDims, Rect, TimeInterval};

pub use synth::{synthesize_bundle, GeneratorSpec, SYNTH_OBJECTS, SYNTH_TOPICS};

pub const BUNDLE_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_MIN_CROP_AREA_FRACTION: f64 = 0.005;
pub const CLIP_LENGTH_S: f64 = 10.0;
pub const FRAME_STEP_S: f64 = 1.0;

const TILE_EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("malformed bundle document at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("bundle validation failed at {path}: {constraint}")]
    Schema { path: String, constraint: String },
    #[error("embedding at {path} has dimension {found}, bundle declares {expected}")]
    EmbeddingDim {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("bundle has no frames")]
    NoFrames,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BundleError {
    fn schema(path: impl Into<String>, constraint: impl Into<String>) -> Self {
        BundleError::Schema {
            path: path.into(),
            constraint: constraint.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSegment {
    #[serde(flatten)]
    pub interval: TimeInterval,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipMetadata {
    #[serde(flatten)]
    pub interval: TimeInterval,
    pub action_label: String,
    pub abstract_caption: String,
    /// One entry per second of the clip, listing salient objects.
    pub dense_captions: Vec<String>,
    pub summary: String,
}

impl ClipMetadata {
    /// Text used for similarity filtering of video references.
    pub fn dense_text(&self) -> String {
        self.dense_captions.join("; ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceCrop {
    pub rect: Rect,
    pub area_fraction: f64,
    pub granularity_level: u8,
    pub embedding: Embedding,
    /// Free-form name, present in generated fixtures; never used for grounding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetadata {
    pub timestamp_s: f64,
    pub crops: Vec<InstanceCrop>,
}

fn default_schema_version() -> u32 {
    BUNDLE_SCHEMA_VERSION
}

fn default_min_crop() -> f64 {
    DEFAULT_MIN_CROP_AREA_FRACTION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataBundle {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub video_id: String,
    pub duration_s: f64,
    pub frame_dims: FrameDims,
    pub embedding_dim: usize,
    #[serde(default = "default_min_crop")]
    pub min_crop_area_fraction: f64,
    pub transcript: Vec<TranscriptSegment>,
    pub clips: Vec<ClipMetadata>,
    pub frames: Vec<FrameMetadata>,
}

/// Parses and validates a bundle document.
pub fn load_bundle<R: Read>(source: R) -> Result<MetadataBundle, BundleError> {
    let mut de = serde_json::Deserializer::from_reader(source);
    let bundle: MetadataBundle =
        serde_path_to_error::deserialize(&mut de).map_err(|e| BundleError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    bundle.validate()?;
    Ok(bundle)
}

pub fn load_bundle_file(path: impl AsRef<std::path::Path>) -> Result<MetadataBundle, BundleError> {
    let file = std::fs::File::open(path)?;
    load_bundle(std::io::BufReader::new(file))
}

impl MetadataBundle {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    pub fn video_interval(&self) -> TimeInterval {
        TimeInterval::new(0.0, self.duration_s).expect("validated duration")
    }

    pub fn validate(&self) -> Result<(), BundleError> {
        if self.schema_version != BUNDLE_SCHEMA_VERSION {
            return Err(BundleError::schema(
                "schema_version",
                format!(
                    "unsupported version {}, expected {BUNDLE_SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        if self.video_id.trim().is_empty() {
            return Err(BundleError::schema("video_id", "must be non-empty"));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(BundleError::schema(
                "duration_s",
                "must be a positive number",
            ));
        }
        if self.embedding_dim == 0 {
            return Err(BundleError::schema("embedding_dim", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.min_crop_area_fraction) {
            return Err(BundleError::schema(
                "min_crop_area_fraction",
                "must be in [0, 1)",
            ));
        }
        self.validate_transcript()?;
        self.validate_clips()?;
        self.validate_frames()
    }

    fn check_in_video(&self, path: &str, iv: &TimeInterval) -> Result<(), BundleError> {
        if iv.end_s() > self.duration_s + TILE_EPS {
            return Err(BundleError::schema(
                path,
                format!("interval {iv} extends past duration {}", self.duration_s),
            ));
        }
        Ok(())
    }

    fn validate_transcript(&self) -> Result<(), BundleError> {
        for (i, seg) in self.transcript.iter().enumerate() {
            let path = format!("transcript[{i}]");
            self.check_in_video(&path, &seg.interval)?;
            if seg.text.trim().is_empty() {
                return Err(BundleError::schema(
                    format!("{path}.text"),
                    "must be non-empty",
                ));
            }
            if i > 0 {
                let prev = &self.transcript[i - 1].interval;
                if seg.interval.start_s() < prev.start_s() {
                    return Err(BundleError::schema(
                        path,
                        "transcript segments not sorted by start",
                    ));
                }
                if seg.interval.intersects(prev) {
                    return Err(BundleError::schema(path, "transcript segments overlap"));
                }
            }
        }
        Ok(())
    }

    fn validate_clips(&self) -> Result<(), BundleError> {
        if self.clips.is_empty() {
            return Err(BundleError::schema(
                "clips",
                "must tile the video; found no clips",
            ));
        }
        let mut expected_start = 0.0;
        for (i, clip) in self.clips.iter().enumerate() {
            let path = format!("clips[{i}]");
            let iv = clip.interval;
            if iv.start_s() < expected_start - TILE_EPS {
                return Err(BundleError::schema(path, "clips overlap"));
            }
            if iv.start_s() > expected_start + TILE_EPS {
                return Err(BundleError::schema(
                    path,
                    format!("gap between clips before {}", iv.start_s()),
                ));
            }
            if iv.length_s() > CLIP_LENGTH_S + TILE_EPS {
                return Err(BundleError::schema(
                    path,
                    format!("clip longer than {CLIP_LENGTH_S} s"),
                ));
            }
            self.check_in_video(&format!("clips[{i}]"), &iv)?;
            expected_start = iv.end_s();
        }
        if (expected_start - self.duration_s).abs() > TILE_EPS {
            return Err(BundleError::schema(
                "clips",
                format!(
                    "clips end at {expected_start}, video duration is {}",
                    self.duration_s
                ),
            ));
        }
        Ok(())
    }

    fn validate_frames(&self) -> Result<(), BundleError> {
        let n = self.frames.len();
        for (i, frame) in self.frames.iter().enumerate() {
            let path = format!("frames[{i}]");
            let t = frame.timestamp_s;
            if !(t.is_finite() && t >= 0.0 && t < self.duration_s) {
                return Err(BundleError::schema(
                    format!("{path}.timestamp_s"),
                    "must lie in [0, duration)",
                ));
            }
            if i > 0 {
                let gap = t - self.frames[i - 1].timestamp_s;
                let last = i == n - 1;
                let on_grid = (gap - FRAME_STEP_S).abs() <= TILE_EPS;
                if gap <= 0.0 || (!on_grid && !(last && gap < FRAME_STEP_S)) {
                    return Err(BundleError::schema(
                        format!("{path}.timestamp_s"),
                        format!("frames must be sampled every {FRAME_STEP_S} s"),
                    ));
                }
            }
            for (j, crop) in frame.crops.iter().enumerate() {
                let cpath = format!("{path}.crops[{j}]");
                let area = crop.rect.area();
                if !(crop.area_fraction > 0.0 && crop.area_fraction <= 1.0) {
                    return Err(BundleError::schema(
                        format!("{cpath}.area_fraction"),
                        "must be in (0, 1]",
                    ));
                }
                if (crop.area_fraction - area).abs() > 1e-6 {
                    return Err(BundleError::schema(
                        format!("{cpath}.area_fraction"),
                        format!("{} does not equal rect area {area}", crop.area_fraction),
                    ));
                }
                if crop.area_fraction < self.min_crop_area_fraction {
                    return Err(BundleError::schema(
                        format!("{cpath}.area_fraction"),
                        format!(
                            "{} is below the minimum crop area fraction {}",
                            crop.area_fraction, self.min_crop_area_fraction
                        ),
                    ));
                }
                if crop.embedding.dim() != self.embedding_dim {
                    return Err(BundleError::EmbeddingDim {
                        path: format!("{cpath}.embedding"),
                        expected: self.embedding_dim,
                        found: crop.embedding.dim(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Transcript segments intersecting `window`, in transcript order.
    pub fn snippets_in_range(&self, window: &TimeInterval) -> Vec<&TranscriptSegment> {
        self.transcript
            .iter()
            .filter(|s| s.interval.intersects(window))
            .collect()
    }

    /// Clips intersecting `window`, in order.
    pub fn clips_overlapping(&self, window: &TimeInterval) -> Vec<&ClipMetadata> {
        self.clips
            .iter()
            .filter(|c| c.interval.intersects(window))
            .collect()
    }

    /// The sampled frame closest to `t`; an exact tie goes to the earlier frame.
    pub fn frame_nearest(&self, t: f64) -> Result<&FrameMetadata, BundleError> {
        let mut best: Option<(&FrameMetadata, f64)> = None;
        for frame in &self.frames {
            let d = (frame.timestamp_s - t).abs();
            match best {
                Some((_, bd)) if d >= bd => {}
                _ => best = Some((frame, d)),
            }
        }
        best.map(|(f, _)| f).ok_or(BundleError::NoFrames)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundle_60s() -> MetadataBundle {
        synthesize_bundle(&GeneratorSpec::new("demo", 60.0), 1)
    }

    fn iv(a: f64, b: f64) -> TimeInterval {
        TimeInterval::new(a, b).unwrap()
    }

    fn reload(value: serde_json::Value) -> Result<MetadataBundle, BundleError> {
        load_bundle(value.to_string().as_bytes())
    }

    #[test]
    fn loads_well_formed_bundle() {
        let b = bundle_60s();
        let loaded = load_bundle(b.to_json().as_bytes()).unwrap();
        assert_eq!(loaded.clips.len(), 6);
        assert_eq!(loaded.frames.len(), 60);
        assert_eq!(loaded, b);
    }

    #[test]
    fn overlapping_clips_rejected() {
        let mut v = serde_json::to_value(bundle_60s()).unwrap();
        v["clips"][1]["start_s"] = 5.0.into();
        v["clips"][1]["end_s"] = 15.0.into();
        let err = reload(v).unwrap_err();
        match err {
            BundleError::Schema { path, constraint } => {
                assert_eq!(path, "clips[1]");
                assert_eq!(constraint, "clips overlap");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn crop_below_minimum_area_rejected() {
        let mut v = serde_json::to_value(bundle_60s()).unwrap();
        v["min_crop_area_fraction"] = 0.005.into();
        let crop = &mut v["frames"][0]["crops"][0];
        // 0.04 * 0.05 = 0.002 < 0.005
        crop["rect"] = serde_json::json!({"x": 0.1, "y": 0.1, "w": 0.04, "h": 0.05});
        crop["area_fraction"] = 0.002.into();
        let err = reload(v).unwrap_err();
        assert!(
            matches!(&err, BundleError::Schema { path, .. } if path == "frames[0].crops[0].area_fraction"),
            "{err}"
        );
    }

    #[test]
    fn embedding_dimension_mismatch_is_distinct() {
        let mut v = serde_json::to_value(bundle_60s()).unwrap();
        v["frames"][3]["crops"][0]["embedding"] = serde_json::json!([1.0, 0.0]);
        assert!(matches!(
            reload(v).unwrap_err(),
            BundleError::EmbeddingDim {
                expected: 64,
                found: 2,
                ..
            }
        ));
    }

    #[test]
    fn type_level_errors_name_their_path() {
        let mut v = serde_json::to_value(bundle_60s()).unwrap();
        v["transcript"][2]["end_s"] = (-1.0).into();
        match reload(v).unwrap_err() {
            BundleError::Parse { path, .. } => assert_eq!(path, "transcript[2]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn off_grid_frames_rejected() {
        let mut v = serde_json::to_value(bundle_60s()).unwrap();
        v["frames"][5]["timestamp_s"] = 5.5.into();
        assert!(matches!(reload(v).unwrap_err(), BundleError::Schema { .. }));
    }

    #[test]
    fn snippet_queries() {
        let mut b = bundle_60s();
        b.transcript = vec![
            TranscriptSegment {
                interval: iv(0.0, 10.0),
                text: "a".into(),
            },
            TranscriptSegment {
                interval: iv(10.0, 20.0),
                text: "b".into(),
            },
            TranscriptSegment {
                interval: iv(20.0, 30.0),
                text: "c".into(),
            },
        ];
        assert_eq!(b.snippets_in_range(&b.video_interval()).len(), 3);
        let one = b.snippets_in_range(&iv(12.0, 14.0));
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].text, "b");
        let two: Vec<_> = b
            .snippets_in_range(&iv(9.0, 11.0))
            .iter()
            .map(|s| s.text.clone())
            .collect();
        assert_eq!(two, ["a", "b"]);
    }

    #[test]
    fn clip_queries() {
        let b = bundle_60s();
        assert_eq!(b.clips_overlapping(&b.video_interval()).len(), 6);
        let first = b.clips_overlapping(&iv(0.0, 1.0));
        assert_eq!(first.len(), 1);
        assert_eq!(first[0].interval, iv(0.0, 10.0));
        let pair: Vec<_> = b
            .clips_overlapping(&iv(9.5, 10.5))
            .iter()
            .map(|c| c.interval)
            .collect();
        assert_eq!(pair, [iv(0.0, 10.0), iv(10.0, 20.0)]);
    }

    #[test]
    fn nearest_frame_rules() {
        let b = bundle_60s();
        assert_eq!(b.frame_nearest(5.0).unwrap().timestamp_s, 5.0);
        assert_eq!(b.frame_nearest(5.4).unwrap().timestamp_s, 5.0);
        assert_eq!(b.frame_nearest(5.5).unwrap().timestamp_s, 5.0);
        assert_eq!(b.frame_nearest(5.6).unwrap().timestamp_s, 6.0);

        let mut empty = b.clone();
        empty.frames.clear();
        assert!(matches!(
            empty.frame_nearest(1.0),
            Err(BundleError::NoFrames)
        ));
    }

    #[test]
    fn synthesize_is_deterministic() {
        let spec = GeneratorSpec::new("v", 30.0);
        let a = synthesize_bundle(&spec, 1);
        assert_eq!(a.clips.len(), 3);
        assert_eq!(a.frames.len(), 30);
        assert_eq!(a, synthesize_bundle(&spec, 1));
        let c = synthesize_bundle(&spec, 2);
        let captions = |b: &MetadataBundle| {
            b.clips
                .iter()
                .map(|c| c.abstract_caption.clone())
                .collect::<Vec<_>>()
        };
        assert_ne!(captions(&a), captions(&c));
        a.validate().unwrap();
    }

    #[test]
    fn synthesized_bundles_validate_for_odd_durations() {
        for (dur, seed) in [(7.5, 3), (41.3, 4), (120.0, 5)] {
            let b = synthesize_bundle(&GeneratorSpec::new("odd", dur), seed);
            b.validate().unwrap();
            assert_eq!(b.clips.len(), (dur / 10.0f64).ceil() as usize);
        }
    }

    mod brute {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn window_queries_match_brute_force(start in 0.0f64..59.0, len in 0.01f64..30.0) {
                let b = bundle_60s();
                let w = iv(start, (start + len).min(60.0));
                let got = b.snippets_in_range(&w);
                let want: Vec<_> = b.transcript.iter()
                    .filter(|s| s.interval.start_s().max(w.start_s()) < s.interval.end_s().min(w.end_s()))
                    .collect();
                prop_assert_eq!(got, want);
                let got = b.clips_overlapping(&w);
                let want: Vec<_> = b.clips.iter()
                    .filter(|c| c.interval.start_s().max(w.start_s()) < c.interval.end_s().min(w.end_s()))
                    .collect();
                prop_assert_eq!(got, want);
            }
        }
    }
}
