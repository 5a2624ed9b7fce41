//! Stage 2: candidate video segments for each temporal reference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::metadata::MetadataBundle;
use crate::model::{shift_into, Embedding, TemporalRefCategory, TimeInterval};
use crate::parser::{RefSpan, TemporalRef};
use crate::providers::templates::{
    ClipRequest, IndexedClip, IndexedSnippet, MatchItem, PositionOutput, PositionRequest,
    SegmentOut, SnippetRequest,
};
use crate::providers::{
    cosine, ChatRequest, PromptTemplateId, ProviderError, ProviderMode, Providers,
};
use crate::timecode::{scan_positions, PositionKind, ABSTRACT_WINDOW_S};

/// Number of snippets or clips shown to the model per reference.
pub const DEFAULT_TOP_K: usize = 10;
/// Length of the interval placed around a bare timecode.
pub const TIMECODE_WINDOW_S: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSegment {
    pub interval: TimeInterval,
    pub source_category: TemporalRefCategory,
    pub explanation: String,
    /// `None` for the playhead default used when a command names no time.
    pub source_ref: Option<RefSpan>,
    /// Overlaps a candidate grounded from a different reference.
    #[serde(default)]
    pub duplicate: bool,
}

/// Intervals for a positional reference, plus diagnostics for the parts
/// that could not be placed.
pub fn parse_position_ref(span_text: &str, duration_s: f64) -> (Vec<TimeInterval>, Vec<String>) {
    let mut out = Vec::new();
    let mut diags = Vec::new();
    let video = TimeInterval::new(0.0, duration_s).ok();
    let matches = scan_positions(span_text);
    if matches.is_empty() {
        diags.push(format!(
            "no timecode, range or position word in {span_text:?}"
        ));
    }
    for m in matches {
        let placed = match m.kind {
            PositionKind::Timecode(t) if t < duration_s => {
                shift_into(t - TIMECODE_WINDOW_S / 2.0, TIMECODE_WINDOW_S, duration_s).ok()
            }
            PositionKind::Timecode(t) => {
                diags.push(format!(
                    "timecode {t}s is past the end of the video ({duration_s}s)"
                ));
                continue;
            }
            PositionKind::Range(a, b) => {
                let clipped = TimeInterval::new(a, b)
                    .ok()
                    .zip(video)
                    .and_then(|(r, v)| r.intersection(&v));
                if clipped.is_none() {
                    diags.push(format!(
                        "range {:?} is empty or outside the video",
                        &span_text[m.start..m.end]
                    ));
                }
                clipped
            }
            PositionKind::Start => TimeInterval::new(0.0, duration_s.min(ABSTRACT_WINDOW_S)).ok(),
            PositionKind::End => {
                TimeInterval::new((duration_s - ABSTRACT_WINDOW_S).max(0.0), duration_s).ok()
            }
        };
        out.extend(placed);
    }
    (out, diags)
}

/// An item to rank against a query embedding.
#[derive(Debug, Clone)]
pub struct RankItem<'a> {
    pub id: usize,
    pub start_s: f64,
    pub embedding: &'a Embedding,
}

/// Ids of the `k` items most similar to `query`, best first; equal scores
/// go to the earlier start.
pub fn filter_top_k(
    query: &Embedding,
    items: &[RankItem<'_>],
    k: usize,
) -> Result<Vec<usize>, ProviderError> {
    let mut scored = items
        .iter()
        .map(|it| Ok((cosine(query, it.embedding)?, it.start_s, it.id)))
        .collect::<Result<Vec<_>, ProviderError>>()?;
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    Ok(scored.into_iter().take(k).map(|(_, _, id)| id).collect())
}

/// Embeddings of every transcript snippet and clip description, computed
/// once per bundle. Entries that cannot be embedded are `None`.
#[derive(Debug, Clone)]
pub struct SegmentIndex {
    pub snippets: Vec<Option<Embedding>>,
    pub clips: Vec<Option<Embedding>>,
}

/// The text embedded for a clip when filtering video references.
pub fn clip_filter_text(clip: &crate::metadata::ClipMetadata) -> String {
    let dense = clip.dense_text();
    if dense.trim().is_empty() {
        format!("{}; {}", clip.action_label, clip.abstract_caption)
    } else {
        dense
    }
}

fn embed_or_skip(providers: &Providers, text: &str) -> Result<Option<Embedding>, ProviderError> {
    match providers.embed_text(text) {
        Ok(e) => Ok(Some(e)),
        Err(ProviderError::InvalidInput(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

impl SegmentIndex {
    pub fn build(bundle: &MetadataBundle, providers: &Providers) -> Result<Self, ProviderError> {
        let snippets = bundle
            .transcript
            .par_iter()
            .map(|s| embed_or_skip(providers, &s.text))
            .collect::<Result<Vec<_>, _>>()?;
        let clips = bundle
            .clips
            .par_iter()
            .map(|c| embed_or_skip(providers, &clip_filter_text(c)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { snippets, clips })
    }
}

/// Everything stage 2 needs for one command.
#[derive(Clone, Copy)]
pub struct GroundingContext<'a> {
    pub bundle: &'a MetadataBundle,
    pub index: &'a SegmentIndex,
    pub providers: &'a Providers,
    /// Resolved command text, passed to the model as context.
    pub command: &'a str,
    /// Only segments inside this window are considered.
    pub window: TimeInterval,
    pub k: usize,
}

impl<'a> GroundingContext<'a> {
    pub fn new(
        bundle: &'a MetadataBundle,
        index: &'a SegmentIndex,
        providers: &'a Providers,
        command: &'a str,
    ) -> Self {
        Self {
            bundle,
            index,
            providers,
            command,
            window: bundle.video_interval(),
            k: DEFAULT_TOP_K,
        }
    }

    pub fn with_window(mut self, window: TimeInterval) -> Self {
        self.window = window;
        self
    }
}

fn check_indices(items: &[MatchItem], n: usize) -> Result<(), String> {
    match items.iter().find(|m| m.index >= n) {
        Some(m) => Err(format!(
            "index {} is out of range; {} items were given",
            m.index, n
        )),
        None => Ok(()),
    }
}

fn candidates_from_matches(
    ctx: &GroundingContext<'_>,
    r: &TemporalRef,
    matches: &[MatchItem],
    intervals: &[TimeInterval],
    default_explanation: &str,
) -> Vec<CandidateSegment> {
    let mut seen = vec![false; intervals.len()];
    let mut out = Vec::new();
    for m in matches {
        if std::mem::replace(&mut seen[m.index], true) {
            continue;
        }
        let Some(interval) = intervals[m.index].intersection(&ctx.window) else {
            continue;
        };
        let explanation = if m.explanation.trim().is_empty() {
            default_explanation.to_string()
        } else {
            m.explanation.trim().to_string()
        };
        out.push(CandidateSegment {
            interval,
            source_category: r.category,
            explanation,
            source_ref: Some(r.span.clone()),
            duplicate: false,
        });
    }
    out.sort_by(|a, b| a.interval.start_s().total_cmp(&b.interval.start_s()));
    out
}

/// Transcript snippets matching a transcript reference.
pub fn ground_transcript_ref(
    ctx: &GroundingContext<'_>,
    r: &TemporalRef,
) -> Result<Vec<CandidateSegment>, ProviderError> {
    let query = ctx.providers.embed_text(&r.span.surface)?;
    let items: Vec<RankItem> = ctx
        .bundle
        .transcript
        .iter()
        .zip(&ctx.index.snippets)
        .enumerate()
        .filter(|(_, (s, _))| s.interval.intersects(&ctx.window))
        .filter_map(|(id, (s, e))| {
            e.as_ref().map(|embedding| RankItem {
                id,
                start_s: s.interval.start_s(),
                embedding,
            })
        })
        .collect();
    let top = filter_top_k(&query, &items, ctx.k)?;
    if top.is_empty() {
        return Ok(Vec::new());
    }
    let snippets: Vec<IndexedSnippet> = top
        .iter()
        .enumerate()
        .map(|(index, &id)| {
            let s = &ctx.bundle.transcript[id];
            IndexedSnippet {
                index,
                start_s: s.interval.start_s(),
                end_s: s.interval.end_s(),
                text: s.text.clone(),
            }
        })
        .collect();
    let req = ChatRequest::new(
        PromptTemplateId::Stage2Transcript,
        SnippetRequest {
            reference: r.span.surface.clone(),
            command: ctx.command.to_string(),
            snippets,
        },
    );
    let n = top.len();
    let (matches, _) = ctx
        .providers
        .complete_validated::<Vec<MatchItem>, _>(&req, |m| check_indices(m, n))?;
    let intervals: Vec<TimeInterval> = top
        .iter()
        .map(|&id| ctx.bundle.transcript[id].interval)
        .collect();
    Ok(candidates_from_matches(
        ctx,
        r,
        &matches,
        &intervals,
        "transcript matches the reference",
    ))
}

/// Clips whose descriptions match a video reference.
pub fn ground_video_ref(
    ctx: &GroundingContext<'_>,
    r: &TemporalRef,
) -> Result<Vec<CandidateSegment>, ProviderError> {
    let query = ctx.providers.embed_text(&r.span.surface)?;
    let items: Vec<RankItem> = ctx
        .bundle
        .clips
        .iter()
        .zip(&ctx.index.clips)
        .enumerate()
        .filter(|(_, (c, _))| c.interval.intersects(&ctx.window))
        .filter_map(|(id, (c, e))| {
            e.as_ref().map(|embedding| RankItem {
                id,
                start_s: c.interval.start_s(),
                embedding,
            })
        })
        .collect();
    let top = filter_top_k(&query, &items, ctx.k)?;
    if top.is_empty() {
        return Ok(Vec::new());
    }
    let descriptions: Vec<IndexedClip> = top
        .iter()
        .enumerate()
        .map(|(index, &id)| {
            let c = &ctx.bundle.clips[id];
            IndexedClip {
                index,
                start_s: c.interval.start_s(),
                end_s: c.interval.end_s(),
                action_label: c.action_label.clone(),
                abstract_caption: c.abstract_caption.clone(),
                dense_captions: c.dense_captions.clone(),
            }
        })
        .collect();
    let req = ChatRequest::new(
        PromptTemplateId::Stage2Video,
        ClipRequest {
            reference: r.span.surface.clone(),
            command: ctx.command.to_string(),
            descriptions,
        },
    );
    let n = top.len();
    let (matches, _) = ctx
        .providers
        .complete_validated::<Vec<MatchItem>, _>(&req, |m| check_indices(m, n))?;
    let intervals: Vec<TimeInterval> = top
        .iter()
        .map(|&id| ctx.bundle.clips[id].interval)
        .collect();
    Ok(candidates_from_matches(
        ctx,
        r,
        &matches,
        &intervals,
        "clip description matches the reference",
    ))
}

fn check_segments(out: &PositionOutput) -> Result<(), String> {
    for s in &out.segments {
        if !(s.start_s.is_finite() && s.end_s.is_finite() && s.start_s < s.end_s) {
            return Err(format!(
                "segment [{}, {}) is not a valid interval",
                s.start_s, s.end_s
            ));
        }
    }
    Ok(())
}

/// Positional reference: the grammar first, the model only for what the
/// grammar cannot read (and, in live mode, to refine abstract positions).
pub fn ground_position_ref(
    ctx: &GroundingContext<'_>,
    r: &TemporalRef,
) -> Result<(Vec<CandidateSegment>, Vec<String>), ProviderError> {
    let duration = ctx.bundle.duration_s;
    let (intervals, mut diags) = parse_position_ref(&r.span.surface, duration);
    let is_abstract = scan_positions(&r.span.surface)
        .iter()
        .any(|m| matches!(m.kind, PositionKind::Start | PositionKind::End));
    let ask_model =
        intervals.is_empty() || (is_abstract && ctx.providers.mode() == ProviderMode::Live);
    let mut placed: Vec<(TimeInterval, String)> = intervals
        .iter()
        .map(|iv| (*iv, format!("{} read as {}", r.span.surface, iv)))
        .collect();
    if ask_model {
        let hint = intervals
            .iter()
            .map(|iv| SegmentOut {
                start_s: iv.start_s(),
                end_s: iv.end_s(),
                explanation: "default reading".into(),
            })
            .collect();
        let req = ChatRequest::new(
            PromptTemplateId::Stage2Temporal,
            PositionRequest {
                reference: r.span.surface.clone(),
                command: ctx.command.to_string(),
                duration_s: duration,
                hint,
            },
        );
        match ctx
            .providers
            .complete_validated::<PositionOutput, _>(&req, check_segments)
        {
            Ok((out, _)) => {
                let from_model: Vec<(TimeInterval, String)> = out
                    .segments
                    .iter()
                    .filter_map(|s| {
                        let iv =
                            TimeInterval::new(s.start_s.max(0.0), s.end_s.min(duration)).ok()?;
                        let why = if s.explanation.trim().is_empty() {
                            format!("{} placed at {}", r.span.surface, iv)
                        } else {
                            s.explanation.trim().to_string()
                        };
                        Some((iv, why))
                    })
                    .collect();
                if !from_model.is_empty() || intervals.is_empty() {
                    placed = from_model;
                }
            }
            Err(e) if e.is_malformed() => {
                diags.push(format!("position model output rejected: {e}"))
            }
            Err(e) => return Err(e),
        }
    }
    let candidates = placed
        .into_iter()
        .filter_map(|(iv, explanation)| {
            Some(CandidateSegment {
                interval: iv.intersection(&ctx.window)?,
                source_category: TemporalRefCategory::Position,
                explanation,
                source_ref: Some(r.span.clone()),
                duplicate: false,
            })
        })
        .collect();
    Ok((candidates, diags))
}

/// Merges overlapping or touching candidates of one reference and flags
/// overlaps across references. Output is sorted by start.
pub fn merge_candidates(per_ref: Vec<Vec<CandidateSegment>>) -> Vec<CandidateSegment> {
    let mut tagged: Vec<(usize, CandidateSegment)> = Vec::new();
    for (ref_idx, mut list) in per_ref.into_iter().enumerate() {
        list.sort_by(|a, b| a.interval.start_s().total_cmp(&b.interval.start_s()));
        let mut merged: Vec<CandidateSegment> = Vec::new();
        for c in list {
            match merged.last_mut() {
                Some(last) if c.interval.start_s() <= last.interval.end_s() => {
                    let end = last.interval.end_s().max(c.interval.end_s());
                    last.interval = TimeInterval::new(last.interval.start_s(), end).expect("grows");
                    if !last.explanation.split("; ").any(|e| e == c.explanation) {
                        last.explanation = format!("{}; {}", last.explanation, c.explanation);
                    }
                }
                _ => merged.push(c),
            }
        }
        tagged.extend(merged.into_iter().map(|c| (ref_idx, c)));
    }
    let n = tagged.len();
    for i in 0..n {
        for j in i + 1..n {
            if tagged[i].0 != tagged[j].0 && tagged[i].1.interval.intersects(&tagged[j].1.interval)
            {
                tagged[i].1.duplicate = true;
                tagged[j].1.duplicate = true;
            }
        }
    }
    tagged.sort_by(|a, b| {
        a.1.interval
            .start_s()
            .total_cmp(&b.1.interval.start_s())
            .then(a.1.interval.end_s().total_cmp(&b.1.interval.end_s()))
            .then(a.0.cmp(&b.0))
    });
    tagged.into_iter().map(|(_, c)| c).collect()
}

/// Result of grounding all temporal references of a command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TemporalOutcome {
    pub candidates: Vec<CandidateSegment>,
    pub diagnostics: Vec<String>,
}

/// Grounds every reference (concurrently; output order does not depend on
/// scheduling) and merges the result. A command without temporal
/// references gets one segment starting at the playhead.
pub fn ground_all(
    ctx: &GroundingContext<'_>,
    refs: &[TemporalRef],
    playhead_t: f64,
) -> Result<TemporalOutcome, ProviderError> {
    if refs.is_empty() {
        let start = playhead_t.clamp(0.0, ctx.bundle.duration_s);
        let mut candidates = Vec::new();
        if let Some(iv) = shift_into(start, TIMECODE_WINDOW_S, ctx.bundle.duration_s)
            .ok()
            .and_then(|iv| iv.intersection(&ctx.window))
        {
            candidates.push(CandidateSegment {
                interval: iv,
                source_category: TemporalRefCategory::Other,
                explanation: "no time given; placed at the playhead".into(),
                source_ref: None,
                duplicate: false,
            });
        }
        return Ok(TemporalOutcome {
            candidates,
            diagnostics: Vec::new(),
        });
    }
    let results: Vec<Result<(Vec<CandidateSegment>, Vec<String>), ProviderError>> = refs
        .par_iter()
        .map(|r| match r.category {
            TemporalRefCategory::Position => ground_position_ref(ctx, r),
            TemporalRefCategory::Transcript => {
                ground_transcript_ref(ctx, r).map(|c| (c, Vec::new()))
            }
            TemporalRefCategory::Video => ground_video_ref(ctx, r).map(|c| (c, Vec::new())),
            TemporalRefCategory::Other => Ok((
                Vec::new(),
                vec![format!(
                    "temporal reference {:?} has no grounding rule",
                    r.span.surface
                )],
            )),
        })
        .collect();
    let mut per_ref = Vec::new();
    let mut diagnostics = Vec::new();
    for res in results {
        let (c, d) = res?;
        per_ref.push(c);
        diagnostics.extend(d);
    }
    Ok(TemporalOutcome {
        candidates: merge_candidates(per_ref),
        diagnostics,
    })
}
