//! Running the pipeline over a dataset.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::metadata::MetadataBundle;
use crate::model::{EditOperation, TimeInterval};
use crate::parser::{parse, ParsedCommand};
use crate::providers::{ProviderError, Providers};
use crate::spatial;
use crate::temporal::{ground_all, GroundingContext, SegmentIndex};

use super::dataset::{Dataset, Exclusion, GroundTruthEntry};
use super::metrics::{
    aggregate_miou, entry_miou, mean_std, operation_prf, parse_similarity, temporal_prf, Prf,
    RectPair, SpatialScore, MIOU_THRESHOLD, TEMPORAL_MARGIN_S,
};

pub const REPORT_FORMAT: &str = "framecue-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    fn of(xs: &[f64]) -> Self {
        let (mean, std) = mean_std(xs);
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParseScores<T> {
    pub temporal: T,
    pub spatial: T,
    pub operation: T,
    pub parameter: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryReport {
    pub id: String,
    pub failed: bool,
    pub parsing: ParseScores<f64>,
    pub temporal_strict: Prf,
    pub temporal_margin: Prf,
    pub miou: Option<f64>,
    pub operation: Prf,
    pub predicted_segments: Vec<TimeInterval>,
    pub predicted_operations: BTreeSet<EditOperation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialSummary {
    pub miou_mean: f64,
    pub miou_std: f64,
    pub ratio_above: f64,
    pub threshold: f64,
    pub entries_scored: usize,
}

/// Dataset-level scores are means of the per-entry scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub format: String,
    pub version: u32,
    pub entries_evaluated: usize,
    pub entries_failed: usize,
    pub excluded: Vec<Exclusion>,
    pub parsing: ParseScores<MeanStd>,
    pub temporal_strict: Prf,
    pub temporal_margin: Prf,
    pub margin_s: f64,
    pub spatial: SpatialSummary,
    pub operation: Prf,
    pub per_entry: Vec<EntryReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Bundles by video id, with their segment indexes.
pub struct EvalCorpus {
    bundles: BTreeMap<String, (MetadataBundle, SegmentIndex)>,
}

impl EvalCorpus {
    pub fn build(
        bundles: Vec<MetadataBundle>,
        providers: &Providers,
    ) -> Result<Self, ProviderError> {
        let mut map = BTreeMap::new();
        for b in bundles {
            let index = SegmentIndex::build(&b, providers)?;
            map.insert(b.video_id.clone(), (b, index));
        }
        Ok(EvalCorpus { bundles: map })
    }

    pub fn get(&self, video_id: &str) -> Option<(&MetadataBundle, &SegmentIndex)> {
        self.bundles.get(video_id).map(|(b, i)| (b, i))
    }
}

struct Prediction {
    parsed: ParsedCommand,
    segments: Vec<TimeInterval>,
    pairs: Vec<RectPair>,
    diagnostics: Vec<String>,
}

fn predict(
    entry: &GroundTruthEntry,
    corpus: &EvalCorpus,
    providers: &Providers,
) -> Result<Prediction, String> {
    let (bundle, index) = corpus
        .get(&entry.video_id)
        .ok_or_else(|| format!("no bundle for video {}", entry.video_id))?;
    entry
        .command
        .validate(bundle.duration_s)
        .map_err(|e| e.to_string())?;
    let video = bundle.video_interval();
    if let Some(s) = entry
        .gt_segments
        .iter()
        .find(|s| !s.interval.within(&video))
    {
        return Err(format!(
            "ground-truth segment {} is outside the video",
            s.interval
        ));
    }
    let parsed = parse(&entry.command, providers).map_err(|e| format!("parsing failed: {e}"))?;
    let ctx = GroundingContext::new(bundle, index, providers, &parsed.resolved_text);
    let outcome = ground_all(&ctx, &parsed.temporal_refs, entry.command.playhead_t)
        .map_err(|e| format!("temporal grounding failed: {e}"))?;
    let pairs = entry
        .gt_segments
        .iter()
        .map(|g| RectPair {
            pred: spatial::resolve(&g.interval, &parsed, &entry.command, bundle, providers).rect,
            gt: g.rect,
        })
        .collect();
    let mut diagnostics = parsed.diagnostics.clone();
    diagnostics.extend(outcome.diagnostics);
    Ok(Prediction {
        segments: outcome.candidates.iter().map(|c| c.interval).collect(),
        parsed,
        pairs,
        diagnostics,
    })
}

fn texts(spans: impl IntoIterator<Item = String>) -> Vec<String> {
    spans.into_iter().collect()
}

fn score_entry(
    entry: &GroundTruthEntry,
    corpus: &EvalCorpus,
    providers: &Providers,
) -> EntryReport {
    let gt_iv = entry.gt_intervals();
    let pred = match predict(entry, corpus, providers) {
        Ok(p) => p,
        Err(reason) => {
            // Zero prediction: nothing parsed, no segments, no rectangles.
            let sim = |gt: &[String]| if gt.is_empty() { 1.0 } else { 0.0 };
            let g = &entry.gt_parse;
            return EntryReport {
                id: entry.id.clone(),
                failed: true,
                parsing: ParseScores {
                    temporal: sim(&g.temporal_texts),
                    spatial: sim(&g.spatial_texts),
                    operation: sim(&g.operation_texts),
                    parameter: sim(&g.parameter_texts),
                },
                temporal_strict: temporal_prf(&[], &gt_iv, 0.0),
                temporal_margin: temporal_prf(&[], &gt_iv, TEMPORAL_MARGIN_S),
                miou: (!entry.gt_segments.is_empty()).then_some(0.0),
                operation: operation_prf(&BTreeSet::new(), &entry.gt_operations),
                predicted_segments: Vec::new(),
                predicted_operations: BTreeSet::new(),
                diagnostics: vec![reason],
            };
        }
    };
    let p = &pred.parsed;
    let g = &entry.gt_parse;
    let mut diagnostics = pred.diagnostics.clone();
    let mut sim = |name: &str, pred_t: Vec<String>, gt_t: &[String]| match parse_similarity(
        &pred_t, gt_t, providers,
    ) {
        Ok(s) => s,
        Err(e) => {
            diagnostics.push(format!("{name} similarity failed: {e}"));
            0.0
        }
    };
    let parsing = ParseScores {
        temporal: sim(
            "temporal",
            texts(p.temporal_refs.iter().map(|r| r.span.surface.clone())),
            &g.temporal_texts,
        ),
        spatial: sim(
            "spatial",
            texts(p.spatial_refs.iter().map(|r| r.span.surface.clone())),
            &g.spatial_texts,
        ),
        operation: sim(
            "operation",
            texts(p.operation_refs.iter().map(|r| r.surface.clone())),
            &g.operation_texts,
        ),
        parameter: sim(
            "parameter",
            texts(p.param_refs.values().flatten().map(|r| r.surface.clone())),
            &g.parameter_texts,
        ),
    };
    let ops: BTreeSet<EditOperation> = p.operations.iter().copied().collect();
    EntryReport {
        id: entry.id.clone(),
        failed: false,
        parsing,
        temporal_strict: temporal_prf(&pred.segments, &gt_iv, 0.0),
        temporal_margin: temporal_prf(&pred.segments, &gt_iv, TEMPORAL_MARGIN_S),
        miou: entry_miou(&pred.pairs),
        operation: operation_prf(&ops, &entry.gt_operations),
        predicted_segments: pred.segments,
        predicted_operations: ops,
        diagnostics,
    }
}

fn mean_prf(xs: impl Iterator<Item = Prf> + Clone) -> Prf {
    let n = xs.clone().count();
    if n == 0 {
        return Prf::ZERO;
    }
    let (p, r, f) = xs.fold((0.0, 0.0, 0.0), |(p, r, f), x| (p + x.p, r + x.r, f + x.f1));
    let n = n as f64;
    Prf {
        p: p / n,
        r: r / n,
        f1: f / n,
    }
}

/// Runs stages 1 to 3 on every entry and scores the result. Spatial
/// predictions are made on the ground-truth segments.
pub fn run_evaluation(
    dataset: &Dataset,
    corpus: &EvalCorpus,
    providers: &Providers,
) -> MetricsReport {
    let per_entry: Vec<EntryReport> = dataset
        .entries
        .par_iter()
        .map(|e| score_entry(e, corpus, providers))
        .collect();
    let mut warnings = Vec::new();
    if dataset.entries.is_empty() {
        warnings.push("dataset has no valid entries".to_string());
    }
    let sp: SpatialScore = aggregate_miou(per_entry.iter().map(|r| r.miou).collect());
    for i in &sp.excluded {
        warnings.push(format!(
            "entry {} has no ground-truth segments; left out of mIOU",
            dataset.entries[*i].id
        ));
    }
    let col = |f: fn(&ParseScores<f64>) -> f64| {
        MeanStd::of(&per_entry.iter().map(|r| f(&r.parsing)).collect::<Vec<_>>())
    };
    MetricsReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        entries_evaluated: per_entry.len(),
        entries_failed: per_entry.iter().filter(|r| r.failed).count(),
        excluded: dataset.excluded.clone(),
        parsing: ParseScores {
            temporal: col(|p| p.temporal),
            spatial: col(|p| p.spatial),
            operation: col(|p| p.operation),
            parameter: col(|p| p.parameter),
        },
        temporal_strict: mean_prf(per_entry.iter().map(|r| r.temporal_strict)),
        temporal_margin: mean_prf(per_entry.iter().map(|r| r.temporal_margin)),
        margin_s: TEMPORAL_MARGIN_S,
        spatial: SpatialSummary {
            miou_mean: sp.miou,
            miou_std: sp.miou_std,
            ratio_above: sp.ratio_above,
            threshold: MIOU_THRESHOLD,
            entries_scored: sp.per_entry.iter().flatten().count(),
        },
        operation: mean_prf(per_entry.iter().map(|r| r.operation)),
        per_entry,
        warnings,
    }
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned text table of the dataset-level scores.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let p = &self.parsing;
        let _ = writeln!(out, "Parsing performance (cosine similarity)");
        let _ = writeln!(out, "  {:<22} {:>8} {:>8}", "reference", "mean", "std");
        for (name, v) in [
            ("temporal", p.temporal),
            ("spatial", p.spatial),
            ("operation", p.operation),
            ("parameter", p.parameter),
        ] {
            let _ = writeln!(out, "  {:<22} {:>8.4} {:>8.4}", name, v.mean, v.std);
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Interpretation performance");
        let _ = writeln!(out, "  {:<22} {:>8} {:>8} {:>8}", "", "P", "R", "F1");
        let margin = format!("temporal ({}s margin)", self.margin_s);
        for (name, v) in [
            ("temporal (strict)", self.temporal_strict),
            (margin.as_str(), self.temporal_margin),
            ("operation", self.operation),
        ] {
            let _ = writeln!(
                out,
                "  {:<22} {:>8.4} {:>8.4} {:>8.4}",
                name, v.p, v.r, v.f1
            );
        }
        let s = &self.spatial;
        let _ = writeln!(
            out,
            "  {:<22} {:>8} {:>8} {:>8}",
            "",
            "mIOU",
            "std",
            format!(">{}", s.threshold)
        );
        let _ = writeln!(
            out,
            "  {:<22} {:>8.4} {:>8.4} {:>8.4}",
            "spatial", s.miou_mean, s.miou_std, s.ratio_above
        );
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "entries: {} evaluated, {} failed, {} excluded",
            self.entries_evaluated,
            self.entries_failed,
            self.excluded.len()
        );
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}
