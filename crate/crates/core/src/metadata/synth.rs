//! Deterministic fixture bundles.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    ClipMetadata, FrameMetadata, InstanceCrop, MetadataBundle, TranscriptSegment,
    BUNDLE_SCHEMA_VERSION, CLIP_LENGTH_S, DEFAULT_MIN_CROP_AREA_FRACTION, FRAME_STEP_S,
};
use crate::model::{FrameDims, Rect, TimeInterval};
use crate::providers::hashing::{hash_embed, DEFAULT_HASH_SEED};

pub const SYNTH_TOPICS: &[&str] = &[
    "advice",
    "marketing",
    "budget",
    "customers",
    "hiring",
    "pricing",
    "product launch",
    "feedback",
    "networking",
    "funding",
];

pub const SYNTH_OBJECTS: &[&str] = &[
    "red mug",
    "laptop",
    "frying pan",
    "whiteboard",
    "speaker face",
    "potted plant",
    "bookshelf",
    "microphone",
    "display",
    "notebook",
];

const SENTENCES: &[&str] = &[
    "My best {} tip is to start small.",
    "Let's talk about {} for a moment.",
    "A common mistake with {} is waiting too long.",
    "Here is something about {} that helped me.",
    "Think hard about {} before you commit.",
];

const ACTIONS: &[&str] = &[
    "talking to the camera",
    "cooking on the stove",
    "typing on a laptop",
    "drawing on a whiteboard",
    "pouring coffee",
    "holding up a product",
];

/// Parameters of the fixture generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub video_id: String,
    pub duration_s: f64,
    pub frame_dims: FrameDims,
    pub embedding_dim: usize,
    pub snippet_len_s: f64,
    pub crops_per_frame: usize,
    pub min_crop_area_fraction: f64,
}

impl GeneratorSpec {
    pub fn new(video_id: impl Into<String>, duration_s: f64) -> Self {
        Self {
            video_id: video_id.into(),
            duration_s,
            frame_dims: FrameDims {
                width_px: 1280,
                height_px: 720,
            },
            embedding_dim: 64,
            snippet_len_s: 5.0,
            crops_per_frame: 3,
            min_crop_area_fraction: DEFAULT_MIN_CROP_AREA_FRACTION,
        }
    }
}

fn tiles(duration: f64, step: f64) -> Vec<TimeInterval> {
    let mut out = Vec::new();
    let mut start = 0.0;
    while start < duration {
        let end = (start + step).min(duration);
        out.push(TimeInterval::new(start, end).expect("positive tile"));
        start = end;
    }
    out
}

/// Builds a bundle that satisfies every bundle invariant. The output is a
/// pure function of `(spec, seed)`.
pub fn synthesize_bundle(spec: &GeneratorSpec, seed: u64) -> MetadataBundle {
    assert!(spec.duration_s > 0.0, "duration must be positive");
    assert!(spec.crops_per_frame <= SYNTH_OBJECTS.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let transcript = tiles(spec.duration_s, spec.snippet_len_s)
        .into_iter()
        .map(|interval| {
            let topic = SYNTH_TOPICS.choose(&mut rng).unwrap();
            let template = SENTENCES.choose(&mut rng).unwrap();
            TranscriptSegment {
                interval,
                text: template.replace("{}", topic),
            }
        })
        .collect();

    // Every object gets a home position; frames jitter around it.
    let homes: Vec<(f64, f64, f64, f64)> = SYNTH_OBJECTS
        .iter()
        .map(|_| {
            let w = rng.gen_range(0.1..0.35);
            let h = rng.gen_range(0.1..0.35);
            (
                rng.gen_range(0.0..1.0 - w),
                rng.gen_range(0.0..1.0 - h),
                w,
                h,
            )
        })
        .collect();

    let mut frames = Vec::new();
    let mut t = 0.0;
    while t < spec.duration_s {
        let mut picks: Vec<usize> = (0..SYNTH_OBJECTS.len()).collect();
        picks.shuffle(&mut rng);
        picks.truncate(spec.crops_per_frame);
        picks.sort_unstable();
        let crops = picks
            .into_iter()
            .map(|i| {
                let (x, y, w, h) = homes[i];
                let jx = rng.gen_range(-0.02..0.02);
                let jy = rng.gen_range(-0.02..0.02);
                let rect = Rect::clamp(x + jx, y + jy, w, h).expect("positive size");
                let label = SYNTH_OBJECTS[i];
                InstanceCrop {
                    rect,
                    area_fraction: rect.area(),
                    granularity_level: if rect.area() > 0.05 { 0 } else { 1 },
                    embedding: hash_embed(label, spec.embedding_dim, DEFAULT_HASH_SEED)
                        .expect("label has words"),
                    label: Some(label.to_string()),
                }
            })
            .filter(|c| c.area_fraction >= spec.min_crop_area_fraction)
            .collect();
        frames.push(FrameMetadata {
            timestamp_s: t,
            crops,
        });
        t += FRAME_STEP_S;
    }

    let clips = tiles(spec.duration_s, CLIP_LENGTH_S)
        .into_iter()
        .map(|interval| {
            let action = *ACTIONS.choose(&mut rng).unwrap();
            let focus = *SYNTH_OBJECTS.choose(&mut rng).unwrap();
            let seconds = interval.length_s().ceil() as usize;
            let dense_captions = (0..seconds)
                .map(|_| {
                    let mut objs: Vec<&str> = SYNTH_OBJECTS
                        .choose_multiple(&mut rng, 2)
                        .copied()
                        .collect();
                    objs.push(focus);
                    objs.join(", ")
                })
                .collect();
            ClipMetadata {
                interval,
                action_label: action.to_string(),
                abstract_caption: format!("a person {action} next to the {focus}"),
                dense_captions,
                summary: format!("The person is {action}; the {focus} is visible throughout."),
            }
        })
        .collect();

    MetadataBundle {
        schema_version: BUNDLE_SCHEMA_VERSION,
        video_id: spec.video_id.clone(),
        duration_s: spec.duration_s,
        frame_dims: spec.frame_dims,
        embedding_dim: spec.embedding_dim,
        min_crop_area_fraction: spec.min_crop_area_fraction,
        transcript,
        clips,
        frames,
    }
}
