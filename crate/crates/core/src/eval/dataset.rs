//! Ground-truth dataset documents.

use std::collections::BTreeSet;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EditOperation, Rect, TemporalRefCategory, TimeInterval};
use crate::parser::EditCommand;

pub const DATASET_FORMAT: &str = "framecue-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GtParse {
    #[serde(default)]
    pub temporal_texts: Vec<String>,
    #[serde(default)]
    pub spatial_texts: Vec<String>,
    #[serde(default)]
    pub operation_texts: Vec<String>,
    #[serde(default)]
    pub parameter_texts: Vec<String>,
}

/// A ground-truth segment and where in the frame the edit belongs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtSegment {
    #[serde(flatten)]
    pub interval: TimeInterval,
    pub rect: Rect,
}

/// One entry as written in the document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEntry {
    pub id: String,
    pub video_id: String,
    pub self_contained: bool,
    pub temporal_categories: Vec<TemporalRefCategory>,
    pub command: EditCommand,
    pub gt_parse: GtParse,
    pub gt_segments: Vec<GtSegment>,
    pub gt_operations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    pub id: String,
    pub video_id: String,
    pub temporal_categories: Vec<TemporalRefCategory>,
    pub command: EditCommand,
    pub gt_parse: GtParse,
    pub gt_segments: Vec<GtSegment>,
    pub gt_operations: BTreeSet<EditOperation>,
}

impl GroundTruthEntry {
    pub fn gt_intervals(&self) -> Vec<TimeInterval> {
        self.gt_segments.iter().map(|s| s.interval).collect()
    }
}

impl TryFrom<RawEntry> for GroundTruthEntry {
    type Error = String;

    /// Applies the inclusion criteria.
    fn try_from(raw: RawEntry) -> Result<Self, String> {
        if raw.gt_operations.is_empty() {
            return Err("gt_operations is empty".into());
        }
        let gt_operations = raw
            .gt_operations
            .iter()
            .map(|s| {
                s.parse::<EditOperation>()
                    .map_err(|_| format!("unsupported operation {s:?}"))
            })
            .collect::<Result<BTreeSet<_>, _>>()?;
        if raw.temporal_categories.is_empty() {
            return Err("temporal_categories is empty".into());
        }
        if raw
            .temporal_categories
            .contains(&TemporalRefCategory::Other)
        {
            return Err("temporal category \"other\" is not admissible".into());
        }
        if !raw.self_contained {
            return Err("entry is not self-contained".into());
        }
        if raw.command.text.trim().is_empty() {
            return Err("command text is empty".into());
        }
        Ok(GroundTruthEntry {
            id: raw.id,
            video_id: raw.video_id,
            temporal_categories: raw.temporal_categories,
            command: raw.command,
            gt_parse: raw.gt_parse,
            gt_segments: raw.gt_segments,
            gt_operations,
        })
    }
}

impl From<&GroundTruthEntry> for RawEntry {
    fn from(e: &GroundTruthEntry) -> Self {
        RawEntry {
            id: e.id.clone(),
            video_id: e.video_id.clone(),
            self_contained: true,
            temporal_categories: e.temporal_categories.clone(),
            command: e.command.clone(),
            gt_parse: e.gt_parse.clone(),
            gt_segments: e.gt_segments.clone(),
            gt_operations: e
                .gt_operations
                .iter()
                .map(|o| o.as_str().to_string())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    /// Entry id, or its position when the id is unreadable.
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub entries: Vec<GroundTruthEntry>,
    pub excluded: Vec<Exclusion>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a dataset document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format {format:?} version {version}")]
    Version { format: String, version: u32 },
    #[error("duplicate entry id {0}")]
    DuplicateId(String),
}

#[derive(Deserialize)]
struct Document {
    format: String,
    version: u32,
    entries: Vec<serde_json::Value>,
}

#[derive(Serialize)]
struct DocumentOut<'a> {
    format: &'a str,
    version: u32,
    entries: Vec<RawEntry>,
}

/// Reads a dataset. Entries failing an inclusion criterion or the entry
/// schema are listed in `excluded`; the rest are returned.
pub fn load_dataset<R: Read>(mut source: R) -> Result<Dataset, DatasetError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let doc: Document = serde_json::from_str(&text)?;
    if doc.format != DATASET_FORMAT || doc.version != DATASET_VERSION {
        return Err(DatasetError::Version {
            format: doc.format,
            version: doc.version,
        });
    }
    let mut out = Dataset::default();
    let mut ids = BTreeSet::new();
    for (i, v) in doc.entries.into_iter().enumerate() {
        let label = v
            .get("id")
            .and_then(|x| x.as_str())
            .map(str::to_string)
            .unwrap_or_else(|| format!("#{i}"));
        let raw: RawEntry = match serde_path_to_error::deserialize(v) {
            Ok(r) => r,
            Err(e) => {
                out.excluded.push(Exclusion {
                    id: label,
                    reason: format!("{}: {}", e.path(), e.inner()),
                });
                continue;
            }
        };
        if !ids.insert(raw.id.clone()) {
            return Err(DatasetError::DuplicateId(raw.id));
        }
        match GroundTruthEntry::try_from(raw) {
            Ok(e) => out.entries.push(e),
            Err(reason) => out.excluded.push(Exclusion { id: label, reason }),
        }
    }
    Ok(out)
}

pub fn load_dataset_file(path: impl AsRef<std::path::Path>) -> Result<Dataset, DatasetError> {
    load_dataset(std::fs::File::open(path)?)
}

/// Dataset document for `entries`.
pub fn dataset_to_json(entries: &[GroundTruthEntry]) -> String {
    let doc = DocumentOut {
        format: DATASET_FORMAT,
        version: DATASET_VERSION,
        entries: entries.iter().map(RawEntry::from).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("dataset serializes");
    s.push('\n');
    s
}
