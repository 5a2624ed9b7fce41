//! Metric kernels.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{EditOperation, Rect, TimeInterval};
use crate::providers::{cosine, ProviderError, Providers};

/// Relaxed matching distance for temporal scores, in seconds.
pub const TEMPORAL_MARGIN_S: f64 = 10.0;
/// Entries with mIOU above this count toward `ratio_above`.
pub const MIOU_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub p: f64,
    pub r: f64,
    pub f1: f64,
}

impl Prf {
    pub const PERFECT: Prf = Prf {
        p: 1.0,
        r: 1.0,
        f1: 1.0,
    };
    pub const ZERO: Prf = Prf {
        p: 0.0,
        r: 0.0,
        f1: 0.0,
    };

    pub fn new(p: f64, r: f64) -> Prf {
        Prf { p, r, f1: f1(p, r) }
    }
}

/// Harmonic mean; 0 when both are 0.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// A prediction matches a ground-truth segment when their distance is at
/// most `margin_s` (with 0 meaning they intersect). Matching is not
/// one-to-one.
pub fn temporal_prf(pred: &[TimeInterval], gt: &[TimeInterval], margin_s: f64) -> Prf {
    let hit = |a: &TimeInterval, b: &TimeInterval| {
        if margin_s == 0.0 {
            a.intersects(b)
        } else {
            a.distance(b) <= margin_s
        }
    };
    match (pred.is_empty(), gt.is_empty()) {
        (true, true) => return Prf::PERFECT,
        (true, false) | (false, true) => return Prf::ZERO,
        _ => {}
    }
    let tp_pred = pred.iter().filter(|p| gt.iter().any(|g| hit(p, g))).count();
    let tp_gt = gt.iter().filter(|g| pred.iter().any(|p| hit(p, g))).count();
    Prf::new(
        tp_pred as f64 / pred.len() as f64,
        tp_gt as f64 / gt.len() as f64,
    )
}

pub fn operation_prf(pred: &BTreeSet<EditOperation>, gt: &BTreeSet<EditOperation>) -> Prf {
    match (pred.is_empty(), gt.is_empty()) {
        (true, true) => return Prf::PERFECT,
        (true, false) | (false, true) => return Prf::ZERO,
        _ => {}
    }
    let tp = pred.intersection(gt).count() as f64;
    Prf::new(tp / pred.len() as f64, tp / gt.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectPair {
    pub pred: Rect,
    pub gt: Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialScore {
    pub miou: f64,
    pub miou_std: f64,
    pub ratio_above: f64,
    /// Per-entry mIOU, `None` for entries without pairs.
    pub per_entry: Vec<Option<f64>>,
    /// Positions of entries left out for having no pairs.
    pub excluded: Vec<usize>,
}

pub fn entry_miou(pairs: &[RectPair]) -> Option<f64> {
    if pairs.is_empty() {
        return None;
    }
    Some(pairs.iter().map(|p| p.pred.iou(&p.gt)).sum::<f64>() / pairs.len() as f64)
}

/// Mean IOU per entry, then mean over entries and the share of entries
/// above [`MIOU_THRESHOLD`]. Entries without pairs are excluded.
pub fn spatial_miou(per_entry: &[Vec<RectPair>]) -> SpatialScore {
    aggregate_miou(per_entry.iter().map(|p| entry_miou(p)).collect())
}

/// Aggregates per-entry mIOU values; `None` entries are excluded.
pub fn aggregate_miou(per: Vec<Option<f64>>) -> SpatialScore {
    let scored: Vec<f64> = per.iter().flatten().copied().collect();
    let excluded = per
        .iter()
        .enumerate()
        .filter(|(_, m)| m.is_none())
        .map(|(i, _)| i)
        .collect();
    let (miou, miou_std) = mean_std(&scored);
    let ratio_above = if scored.is_empty() {
        0.0
    } else {
        scored.iter().filter(|&&m| m > MIOU_THRESHOLD).count() as f64 / scored.len() as f64
    };
    SpatialScore {
        miou,
        miou_std,
        ratio_above,
        per_entry: per,
        excluded,
    }
}

/// Population mean and standard deviation; zeros for no values.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Cosine between the embeddings of both lists joined with "; ".
pub fn parse_similarity(
    pred: &[String],
    gt: &[String],
    providers: &Providers,
) -> Result<f64, ProviderError> {
    match (pred.is_empty(), gt.is_empty()) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    if pred == gt {
        return Ok(1.0);
    }
    let a = providers.embed_text(&pred.join("; "))?;
    let b = providers.embed_text(&gt.join("; "))?;
    Ok(cosine(&a, &b)?.clamp(-1.0, 1.0))
}
