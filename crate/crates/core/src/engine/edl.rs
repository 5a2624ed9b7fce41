//! Edit decision list export and import.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    EditOperation, EditParameters, FrameDims, PixelRect, Rect, TimeInterval, BOUNDS_EPS,
};
use crate::spatial::SpatialMethod;

use super::project::{
    Edit, EditLayer, EditStatus, ParseSnapshot, Project, ProjectState, Provenance,
};

pub const EDL_FORMAT: &str = "framecue-edl";
pub const EDL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdlProvenance {
    pub command_id: String,
    pub command_text: String,
    pub temporal_explanation: String,
    pub spatial_method: SpatialMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdlEntry {
    pub layer_id: String,
    pub edit_id: String,
    pub operation: EditOperation,
    pub start_s: f64,
    pub end_s: f64,
    pub rect: Rect,
    pub rect_px: PixelRect,
    pub params: EditParameters,
    pub provenance: EdlProvenance,
}

/// Accepted edits of a project, by layer then start time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edl {
    pub format: String,
    pub version: u32,
    pub project_id: String,
    pub video_id: String,
    pub frame_dims: FrameDims,
    pub duration_s: f64,
    pub edits: Vec<EdlEntry>,
}

#[derive(Debug, Error)]
pub enum EdlError {
    #[error("not an edit decision list: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format {format:?} version {version}")]
    Version { format: String, version: u32 },
    #[error("entry {edit_id}: {reason}")]
    Entry { edit_id: String, reason: String },
}

impl Edl {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("edl serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, EdlError> {
        let edl: Edl = serde_json::from_str(text)?;
        edl.validate()?;
        Ok(edl)
    }

    pub fn validate(&self) -> Result<(), EdlError> {
        if self.format != EDL_FORMAT || self.version != EDL_VERSION {
            return Err(EdlError::Version {
                format: self.format.clone(),
                version: self.version,
            });
        }
        let video = TimeInterval::new(0.0, self.duration_s).map_err(|e| EdlError::Entry {
            edit_id: String::new(),
            reason: e.to_string(),
        })?;
        let mut seen = std::collections::HashSet::new();
        for (i, e) in self.edits.iter().enumerate() {
            let bad = |reason: String| EdlError::Entry {
                edit_id: e.edit_id.clone(),
                reason,
            };
            if !seen.insert(&e.edit_id) {
                return Err(bad("duplicate edit id".into()));
            }
            let iv = TimeInterval::new(e.start_s, e.end_s).map_err(|x| bad(x.to_string()))?;
            if iv.end_s() > video.end_s() + BOUNDS_EPS {
                return Err(bad(format!("ends after the video ({}s)", self.duration_s)));
            }
            if e.params.operation() != e.operation {
                return Err(bad(format!(
                    "{} parameters on a {} edit",
                    e.params.operation(),
                    e.operation
                )));
            }
            e.params.validate().map_err(|x| bad(x.to_string()))?;
            if e.rect.to_pixels(self.frame_dims) != e.rect_px {
                return Err(bad("rect_px does not match rect".into()));
            }
            if let Some(o) = self.edits[..i]
                .iter()
                .find(|o| o.layer_id == e.layer_id && o.start_s < e.end_s && e.start_s < o.end_s)
            {
                return Err(bad(format!(
                    "overlaps {} in layer {}",
                    o.edit_id, e.layer_id
                )));
            }
        }
        Ok(())
    }
}

impl Project {
    pub fn export_edl(&self) -> Edl {
        let mut edits = Vec::new();
        for l in self.layers() {
            let mut accepted: Vec<&Edit> = l
                .edits
                .iter()
                .filter(|e| e.status == EditStatus::Accepted)
                .collect();
            accepted.sort_by(|a, b| {
                a.interval
                    .start_s()
                    .total_cmp(&b.interval.start_s())
                    .then_with(|| a.id.cmp(&b.id))
            });
            edits.extend(accepted.into_iter().map(|e| EdlEntry {
                layer_id: l.id.clone(),
                edit_id: e.id.clone(),
                operation: e.operation,
                start_s: e.interval.start_s(),
                end_s: e.interval.end_s(),
                rect: e.rect,
                rect_px: e.rect.to_pixels(self.frame_dims()),
                params: e.params.clone(),
                provenance: EdlProvenance {
                    command_id: e.provenance.command_id.clone(),
                    command_text: e.provenance.command_text.clone(),
                    temporal_explanation: e.provenance.temporal_explanation.clone(),
                    spatial_method: e.provenance.spatial_method,
                },
            }));
        }
        Edl {
            format: EDL_FORMAT.into(),
            version: EDL_VERSION,
            project_id: self.id().into(),
            video_id: self.video_id().into(),
            frame_dims: self.frame_dims(),
            duration_s: self.duration_s(),
            edits,
        }
    }

    /// A project holding exactly the edits of `edl`, all accepted.
    pub fn from_edl(edl: &Edl) -> Result<Project, EdlError> {
        edl.validate()?;
        let mut layers: Vec<EditLayer> = Vec::new();
        for e in &edl.edits {
            let edit = Edit {
                id: e.edit_id.clone(),
                operation: e.operation,
                interval: TimeInterval::new(e.start_s, e.end_s).expect("validated"),
                rect: e.rect,
                params: e.params.clone(),
                status: EditStatus::Accepted,
                superseded: false,
                low_confidence: false,
                provenance: Provenance {
                    command_id: e.provenance.command_id.clone(),
                    command_text: e.provenance.command_text.clone(),
                    temporal_explanation: e.provenance.temporal_explanation.clone(),
                    spatial_method: e.provenance.spatial_method,
                    spatial_explanation: String::new(),
                    parse_snapshot: ParseSnapshot::default(),
                },
            };
            match layers.iter_mut().find(|l| l.id == e.layer_id) {
                Some(l) if l.operation == Some(e.operation) => l.edits.push(edit),
                Some(l) => {
                    return Err(EdlError::Entry {
                        edit_id: e.edit_id.clone(),
                        reason: format!("{} edit in a {:?} layer", e.operation, l.operation),
                    })
                }
                None => layers.push(EditLayer {
                    id: e.layer_id.clone(),
                    operation: Some(e.operation),
                    edits: vec![edit],
                }),
            }
        }
        let state = ProjectState {
            layers,
            commands: Vec::new(),
        };
        Ok(Project::restore(
            edl.project_id.clone(),
            edl.video_id.clone(),
            edl.frame_dims,
            edl.duration_s,
            state,
        ))
    }
}
