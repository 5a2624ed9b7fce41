//! Layers, suggestions, history.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EditOperation, EditParameters, FrameDims, Rect, TimeInterval, BOUNDS_EPS};
use crate::params::default_params;
use crate::parser::{CommandError, EditCommand, ParsedCommand};
use crate::spatial::{SpatialMethod, SpatialResult};

use super::pipeline::{Interpretation, Interpreter};

/// Half-width of the window searched by [`Project::search_more`].
pub const SEARCH_MORE_RADIUS_S: f64 = 60.0;
/// Snapshots kept for undo, including the current one.
pub const MAX_HISTORY: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditStatus {
    Suggested,
    Accepted,
    Rejected,
}

/// Reference spans of the parse an edit came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParseSnapshot {
    pub operations: Vec<EditOperation>,
    pub temporal: Vec<String>,
    pub spatial: Vec<String>,
    pub parameters: Vec<String>,
}

impl ParseSnapshot {
    pub fn of(p: &ParsedCommand) -> Self {
        ParseSnapshot {
            operations: p.operations.clone(),
            temporal: p
                .temporal_refs
                .iter()
                .map(|r| r.span.surface.clone())
                .collect(),
            spatial: p
                .spatial_refs
                .iter()
                .map(|r| r.span.surface.clone())
                .collect(),
            parameters: p
                .param_refs
                .values()
                .flatten()
                .map(|r| r.surface.clone())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub command_id: String,
    pub command_text: String,
    pub temporal_explanation: String,
    pub spatial_method: SpatialMethod,
    #[serde(default)]
    pub spatial_explanation: String,
    #[serde(default)]
    pub parse_snapshot: ParseSnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edit {
    pub id: String,
    pub operation: EditOperation,
    pub interval: TimeInterval,
    pub rect: Rect,
    pub params: EditParameters,
    pub status: EditStatus,
    /// A later iteration of the command replaced this suggestion.
    #[serde(default)]
    pub superseded: bool,
    #[serde(default)]
    pub low_confidence: bool,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditLayer {
    pub id: String,
    /// Operation of the first non-rejected edit.
    pub operation: Option<EditOperation>,
    pub edits: Vec<Edit>,
}

impl EditLayer {
    fn refresh_operation(&mut self) {
        self.operation = self
            .edits
            .iter()
            .find(|e| e.status != EditStatus::Rejected)
            .map(|e| e.operation);
    }

    fn accepts(&self, op: EditOperation) -> bool {
        self.operation.is_none_or(|o| o == op)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandRecord {
    pub id: String,
    pub command: EditCommand,
    pub parse: ParsedCommand,
    pub suggestion_ids: Vec<String>,
    pub parent_command_id: Option<String>,
    pub summary: String,
    /// Operation pre-selected in the editor.
    pub selected_operation: EditOperation,
    /// Where the playhead jumps: start of the earliest suggestion.
    pub focus_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

/// Everything undo and redo restore.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectState {
    pub layers: Vec<EditLayer>,
    pub commands: Vec<CommandRecord>,
}

impl ProjectState {
    pub fn edit(&self, id: &str) -> Option<&Edit> {
        self.layers
            .iter()
            .flat_map(|l| &l.edits)
            .find(|e| e.id == id)
    }

    fn locate(&self, edit_id: &str) -> Option<(usize, usize)> {
        self.layers.iter().enumerate().find_map(|(li, l)| {
            l.edits
                .iter()
                .position(|e| e.id == edit_id)
                .map(|ei| (li, ei))
        })
    }

    pub fn command(&self, id: &str) -> Option<&CommandRecord> {
        self.commands.iter().find(|c| c.id == id)
    }

    pub fn layer(&self, id: &str) -> Option<&EditLayer> {
        self.layers.iter().find(|l| l.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    /// Checks every layer and history invariant; returns the first violation.
    pub fn check_invariants(&self, duration_s: f64) -> Result<(), String> {
        let video = TimeInterval::new(0.0, duration_s).map_err(|e| e.to_string())?;
        let mut seen = std::collections::HashSet::new();
        for l in &self.layers {
            let live: Vec<&Edit> = l
                .edits
                .iter()
                .filter(|e| e.status != EditStatus::Rejected)
                .collect();
            if l.operation != live.first().map(|e| e.operation) {
                return Err(format!(
                    "layer {} operation {:?} is stale",
                    l.id, l.operation
                ));
            }
            for e in &l.edits {
                if !seen.insert(e.id.as_str()) {
                    return Err(format!("duplicate edit id {}", e.id));
                }
                if e.params.operation() != e.operation {
                    return Err(format!("edit {} params do not match {}", e.id, e.operation));
                }
                e.params
                    .validate()
                    .map_err(|err| format!("edit {}: {err}", e.id))?;
                if !e.interval.within(&video) {
                    return Err(format!(
                        "edit {} interval {} is outside the video",
                        e.id, e.interval
                    ));
                }
            }
            if let Some(e) = live.iter().find(|e| Some(e.operation) != l.operation) {
                return Err(format!(
                    "edit {} is {} in a {:?} layer",
                    e.id, e.operation, l.operation
                ));
            }
            let accepted: Vec<&&Edit> = live
                .iter()
                .filter(|e| e.status == EditStatus::Accepted)
                .collect();
            for (i, a) in accepted.iter().enumerate() {
                if let Some(b) = accepted[i + 1..]
                    .iter()
                    .find(|b| a.interval.intersects(&b.interval))
                {
                    return Err(format!("accepted edits {} and {} overlap", a.id, b.id));
                }
            }
        }
        for (i, c) in self.commands.iter().enumerate() {
            if let Some(p) = &c.parent_command_id {
                if !self.commands[..i].iter().any(|o| &o.id == p) {
                    return Err(format!(
                        "command {} has parent {p} that is not earlier",
                        c.id
                    ));
                }
            }
            if let Some(s) = c.suggestion_ids.iter().find(|s| self.edit(s).is_none()) {
                return Err(format!("command {} lists missing edit {s}", c.id));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("no layer {0}")]
    UnknownLayer(String),
    #[error("no edit {0}")]
    UnknownEdit(String),
    #[error("no command {0}")]
    UnknownCommand(String),
    #[error("cannot {action} edit {id} while it is {from:?}")]
    IllegalTransition {
        id: String,
        from: EditStatus,
        action: &'static str,
    },
    #[error("edit {edit_id} would overlap accepted edit {conflicting_id}")]
    OverlapViolation {
        edit_id: String,
        conflicting_id: String,
    },
    #[error("out of bounds: {0}")]
    OutOfBounds(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid command: {0}")]
    InvalidCommand(#[from] CommandError),
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("nothing to redo")]
    NothingToRedo,
}

/// Manual change to one edit. Absent fields stay as they are.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<TimeInterval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rect: Option<Rect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<EditParameters>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operation: Option<EditOperation>,
}

/// Inputs for a search-more run, taken from the project so the pipeline
/// can run without holding it.
#[derive(Debug, Clone)]
pub struct SearchPlan {
    pub command_id: String,
    pub command: EditCommand,
    pub parsed: ParsedCommand,
    pub window: TimeInterval,
    pub near_t: f64,
    pub exclude: Vec<TimeInterval>,
}

impl SearchPlan {
    pub fn run(&self, interp: &Interpreter<'_>) -> Interpretation {
        interp.ground(
            &self.command,
            self.parsed.clone(),
            self.window,
            self.near_t,
            &self.exclude,
        )
    }
}

/// The editing state of one video.
#[derive(Debug, Clone)]
pub struct Project {
    id: String,
    video_id: String,
    frame_dims: FrameDims,
    duration_s: f64,
    revision: u64,
    history: Vec<ProjectState>,
    cursor: usize,
    next_layer: u64,
    next_edit: u64,
    next_command: u64,
}

/// Serialized form of a project for clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectView {
    pub id: String,
    pub video_id: String,
    pub frame_dims: FrameDims,
    pub duration_s: f64,
    pub revision: u64,
    pub can_undo: bool,
    pub can_redo: bool,
    pub layers: Vec<EditLayer>,
    pub commands: Vec<CommandRecord>,
}

impl Project {
    pub fn new(
        id: impl Into<String>,
        video_id: impl Into<String>,
        frame_dims: FrameDims,
        duration_s: f64,
    ) -> Self {
        Project {
            id: id.into(),
            video_id: video_id.into(),
            frame_dims,
            duration_s,
            revision: 0,
            history: vec![ProjectState::default()],
            cursor: 0,
            next_layer: 1,
            next_edit: 1,
            next_command: 1,
        }
    }

    pub fn for_bundle(id: impl Into<String>, bundle: &crate::metadata::MetadataBundle) -> Self {
        Self::new(
            id,
            bundle.video_id.clone(),
            bundle.frame_dims,
            bundle.duration_s,
        )
    }

    pub(crate) fn restore(
        id: String,
        video_id: String,
        frame_dims: FrameDims,
        duration_s: f64,
        state: ProjectState,
    ) -> Self {
        let max_suffix = |ids: &mut dyn Iterator<Item = &String>, tag: char| {
            ids.filter_map(|s| s.rsplit_once(tag).and_then(|(_, n)| n.parse::<u64>().ok()))
                .max()
                .unwrap_or(0)
                + 1
        };
        let next_layer = max_suffix(&mut state.layers.iter().map(|l| &l.id), 'l');
        let next_edit = max_suffix(
            &mut state.layers.iter().flat_map(|l| &l.edits).map(|e| &e.id),
            'e',
        );
        let next_command = max_suffix(&mut state.commands.iter().map(|c| &c.id), 'c');
        Project {
            id,
            video_id,
            frame_dims,
            duration_s,
            revision: 0,
            history: vec![state],
            cursor: 0,
            next_layer,
            next_edit,
            next_command,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn frame_dims(&self) -> FrameDims {
        self.frame_dims
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_s
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn state(&self) -> &ProjectState {
        &self.history[self.cursor]
    }

    pub fn layers(&self) -> &[EditLayer] {
        &self.state().layers
    }

    pub fn commands(&self) -> &[CommandRecord] {
        &self.state().commands
    }

    pub fn edit(&self, id: &str) -> Option<&Edit> {
        self.state().edit(id)
    }

    pub fn command(&self, id: &str) -> Option<&CommandRecord> {
        self.state().command(id)
    }

    pub fn can_undo(&self) -> bool {
        self.cursor > 0
    }

    pub fn can_redo(&self) -> bool {
        self.cursor + 1 < self.history.len()
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    pub fn view(&self) -> ProjectView {
        ProjectView {
            id: self.id.clone(),
            video_id: self.video_id.clone(),
            frame_dims: self.frame_dims,
            duration_s: self.duration_s,
            revision: self.revision,
            can_undo: self.can_undo(),
            can_redo: self.can_redo(),
            layers: self.layers().to_vec(),
            commands: self.commands().to_vec(),
        }
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        if self.history.is_empty() || self.cursor >= self.history.len() {
            return Err("history cursor out of range".into());
        }
        self.state().check_invariants(self.duration_s)
    }

    fn commit(&mut self, mut next: ProjectState) {
        for l in &mut next.layers {
            l.refresh_operation();
        }
        self.history.truncate(self.cursor + 1);
        self.history.push(next);
        if self.history.len() > MAX_HISTORY {
            self.history.remove(0);
        }
        self.cursor = self.history.len() - 1;
        self.revision += 1;
    }

    fn new_layer_id(&mut self) -> String {
        let id = format!("{}-l{}", self.id, self.next_layer);
        self.next_layer += 1;
        id
    }

    pub fn add_layer(&mut self) -> String {
        let id = self.new_layer_id();
        let mut next = self.state().clone();
        next.layers.push(EditLayer {
            id: id.clone(),
            operation: None,
            edits: Vec::new(),
        });
        self.commit(next);
        id
    }

    /// Rejects commands that cannot be run against this project.
    pub fn check_command(
        &self,
        cmd: &EditCommand,
        parent: Option<&str>,
    ) -> Result<(), EngineError> {
        cmd.validate(self.duration_s)?;
        if let Some(l) = &cmd.layer_id {
            if self.state().layer(l).is_none() {
                return Err(EngineError::UnknownLayer(l.clone()));
            }
        }
        if let Some(p) = parent {
            if self.command(p).is_none() {
                return Err(EngineError::UnknownCommand(p.into()));
            }
        }
        Ok(())
    }

    /// Runs the pipeline for `cmd` and records one suggestion per
    /// candidate segment and operation. Returns the command id.
    pub fn submit_command(
        &mut self,
        cmd: EditCommand,
        interp: &Interpreter<'_>,
        parent: Option<&str>,
    ) -> Result<String, EngineError> {
        self.check_command(&cmd, parent)?;
        let it = interp.interpret(&cmd);
        self.apply_interpretation(cmd, it, parent)
    }

    /// Second half of [`Project::submit_command`].
    pub fn apply_interpretation(
        &mut self,
        cmd: EditCommand,
        it: Interpretation,
        parent: Option<&str>,
    ) -> Result<String, EngineError> {
        self.check_command(&cmd, parent)?;
        let mut next = self.state().clone();
        let command_id = format!("{}-c{}", self.id, self.next_command);
        let target = match &cmd.layer_id {
            Some(l) => next
                .layers
                .iter()
                .position(|x| &x.id == l)
                .expect("checked"),
            None => match next.layers.first() {
                Some(_) => 0,
                None => {
                    let id = self.new_layer_id();
                    next.layers.push(EditLayer {
                        id,
                        operation: None,
                        edits: Vec::new(),
                    });
                    0
                }
            },
        };
        if let Some(p) = parent {
            let old: Vec<String> = next
                .command(p)
                .map(|c| c.suggestion_ids.clone())
                .unwrap_or_default();
            for l in &mut next.layers {
                for e in &mut l.edits {
                    if e.status == EditStatus::Suggested && old.contains(&e.id) {
                        e.superseded = true;
                    }
                }
            }
        }
        let head = it.parsed.head_operation();
        let mut routes: BTreeMap<EditOperation, usize> = BTreeMap::new();
        if next.layers[target].accepts(head) {
            routes.insert(head, target);
        }
        let ids = self.place(&mut next, &it, &command_id, &cmd, &mut routes);
        let mut diagnostics = it.parsed.diagnostics.clone();
        diagnostics.extend(it.diagnostics.iter().cloned());
        let record = CommandRecord {
            id: command_id.clone(),
            summary: summarize(&it),
            selected_operation: head,
            focus_t: it
                .suggestions
                .iter()
                .map(|s| s.interval.start_s())
                .min_by(f64::total_cmp),
            command: cmd,
            parse: it.parsed,
            suggestion_ids: ids,
            parent_command_id: parent.map(str::to_string),
            diagnostics,
        };
        next.commands.push(record);
        self.next_command += 1;
        self.commit(next);
        Ok(command_id)
    }

    /// Adds suggestions to layers, spawning a sibling layer for every
    /// operation without a compatible one in `routes`.
    fn place(
        &mut self,
        next: &mut ProjectState,
        it: &Interpretation,
        command_id: &str,
        cmd: &EditCommand,
        routes: &mut BTreeMap<EditOperation, usize>,
    ) -> Vec<String> {
        let snapshot = ParseSnapshot::of(&it.parsed);
        let mut ids = Vec::new();
        for s in &it.suggestions {
            let li = match routes.get(&s.operation) {
                Some(&li) if next.layers[li].accepts(s.operation) => li,
                _ => {
                    let id = self.new_layer_id();
                    next.layers.push(EditLayer {
                        id,
                        operation: Some(s.operation),
                        edits: Vec::new(),
                    });
                    routes.insert(s.operation, next.layers.len() - 1);
                    next.layers.len() - 1
                }
            };
            let id = format!("{}-e{}", self.id, self.next_edit);
            self.next_edit += 1;
            let candidate = &it.candidates[s.candidate];
            next.layers[li].edits.push(Edit {
                id: id.clone(),
                operation: s.operation,
                interval: s.interval,
                rect: s.rect,
                params: s.params.clone(),
                status: EditStatus::Suggested,
                superseded: false,
                low_confidence: s.low_confidence,
                provenance: Provenance {
                    command_id: command_id.to_string(),
                    command_text: cmd.text.clone(),
                    temporal_explanation: candidate.explanation.clone(),
                    spatial_method: s.spatial.method,
                    spatial_explanation: s.spatial.explanation.clone(),
                    parse_snapshot: snapshot.clone(),
                },
            });
            next.layers[li].refresh_operation();
            ids.push(id);
        }
        ids
    }

    fn first_overlap(layer: &EditLayer, edit_id: &str, interval: &TimeInterval) -> Option<String> {
        layer
            .edits
            .iter()
            .find(|o| {
                o.id != edit_id
                    && o.status == EditStatus::Accepted
                    && o.interval.intersects(interval)
            })
            .map(|o| o.id.clone())
    }

    pub fn accept(&mut self, edit_id: &str) -> Result<(), EngineError> {
        let (li, ei) = self
            .state()
            .locate(edit_id)
            .ok_or_else(|| EngineError::UnknownEdit(edit_id.into()))?;
        let layer = &self.state().layers[li];
        let e = &layer.edits[ei];
        if e.status != EditStatus::Suggested {
            return Err(EngineError::IllegalTransition {
                id: edit_id.into(),
                from: e.status,
                action: "accept",
            });
        }
        if let Some(c) = Self::first_overlap(layer, edit_id, &e.interval) {
            return Err(EngineError::OverlapViolation {
                edit_id: edit_id.into(),
                conflicting_id: c,
            });
        }
        let mut next = self.state().clone();
        next.layers[li].edits[ei].status = EditStatus::Accepted;
        self.commit(next);
        Ok(())
    }

    pub fn reject(&mut self, edit_id: &str) -> Result<(), EngineError> {
        let (li, ei) = self
            .state()
            .locate(edit_id)
            .ok_or_else(|| EngineError::UnknownEdit(edit_id.into()))?;
        let e = &self.state().layers[li].edits[ei];
        if e.status != EditStatus::Suggested {
            return Err(EngineError::IllegalTransition {
                id: edit_id.into(),
                from: e.status,
                action: "reject",
            });
        }
        let mut next = self.state().clone();
        next.layers[li].edits[ei].status = EditStatus::Rejected;
        self.commit(next);
        Ok(())
    }

    /// Applies the whole patch or nothing.
    pub fn adjust_edit(&mut self, edit_id: &str, patch: &EditPatch) -> Result<(), EngineError> {
        let (li, ei) = self
            .state()
            .locate(edit_id)
            .ok_or_else(|| EngineError::UnknownEdit(edit_id.into()))?;
        let layer = &self.state().layers[li];
        let old = &layer.edits[ei];
        if old.status == EditStatus::Rejected {
            return Err(EngineError::IllegalTransition {
                id: edit_id.into(),
                from: old.status,
                action: "adjust",
            });
        }
        let mut e = old.clone();
        if let Some(iv) = patch.interval {
            if iv.end_s() > self.duration_s + BOUNDS_EPS {
                return Err(EngineError::OutOfBounds(format!(
                    "interval: {iv} ends after the video ({}s)",
                    self.duration_s
                )));
            }
            e.interval = iv;
        }
        if let Some(r) = patch.rect {
            e.rect = r;
        }
        if let Some(op) = patch.operation {
            if op != e.operation {
                if let Some(other) = layer
                    .edits
                    .iter()
                    .find(|o| o.id != edit_id && o.status != EditStatus::Rejected)
                {
                    return Err(EngineError::SchemaMismatch(format!(
                        "operation: layer {} also holds {} edit {}",
                        layer.id, other.operation, other.id
                    )));
                }
                e.operation = op;
                if patch.params.is_none() {
                    let spatial = SpatialResult {
                        rect: e.rect,
                        method: e.provenance.spatial_method,
                        score: None,
                        frame_t: e.interval.midpoint_s(),
                        explanation: String::new(),
                        refined_from: None,
                        low_confidence: false,
                    };
                    e.params = default_params(op, &spatial, &e.interval, self.frame_dims);
                    if let (EditParameters::Text(new), EditParameters::Text(prev)) =
                        (&mut e.params, &old.params)
                    {
                        new.content = prev.content.clone();
                    }
                }
            }
        }
        if let Some(p) = &patch.params {
            e.params = p.clone();
        }
        if e.params.operation() != e.operation {
            return Err(EngineError::SchemaMismatch(format!(
                "params: {} parameters on a {} edit",
                e.params.operation(),
                e.operation
            )));
        }
        e.params
            .validate()
            .map_err(|err| EngineError::SchemaMismatch(format!("params: {err}")))?;
        if patch.interval.is_some() {
            if let Some(c) = Self::first_overlap(layer, edit_id, &e.interval) {
                return Err(EngineError::OverlapViolation {
                    edit_id: edit_id.into(),
                    conflicting_id: c,
                });
            }
        }
        let mut next = self.state().clone();
        next.layers[li].edits[ei] = e;
        self.commit(next);
        Ok(())
    }

    /// Window and exclusions for a search-more run near `near_t`.
    pub fn plan_search(&self, command_id: &str, near_t: f64) -> Result<SearchPlan, EngineError> {
        let rec = self
            .command(command_id)
            .ok_or_else(|| EngineError::UnknownCommand(command_id.into()))?;
        if !(near_t.is_finite() && (0.0..=self.duration_s).contains(&near_t)) {
            return Err(EngineError::OutOfBounds(format!(
                "near_t: {near_t} is outside [0, {}]",
                self.duration_s
            )));
        }
        let lo = (near_t - SEARCH_MORE_RADIUS_S).max(0.0);
        let hi = (near_t + SEARCH_MORE_RADIUS_S).min(self.duration_s);
        let window =
            TimeInterval::new(lo, hi).map_err(|e| EngineError::OutOfBounds(e.to_string()))?;
        let exclude = rec
            .suggestion_ids
            .iter()
            .filter_map(|id| self.edit(id))
            .map(|e| e.interval)
            .collect();
        Ok(SearchPlan {
            command_id: command_id.into(),
            command: rec.command.clone(),
            parsed: rec.parse.clone(),
            window,
            near_t,
            exclude,
        })
    }

    /// Appends the suggestions of a search-more run to the command record.
    pub fn apply_search(
        &mut self,
        plan: &SearchPlan,
        it: Interpretation,
    ) -> Result<Vec<String>, EngineError> {
        let rec = self
            .command(&plan.command_id)
            .ok_or_else(|| EngineError::UnknownCommand(plan.command_id.clone()))?;
        let mut next = self.state().clone();
        let mut routes = BTreeMap::new();
        for id in &rec.suggestion_ids {
            if let Some((li, ei)) = next.locate(id) {
                routes
                    .entry(next.layers[li].edits[ei].operation)
                    .or_insert(li);
            }
        }
        let ci = next
            .commands
            .iter()
            .position(|c| c.id == plan.command_id)
            .expect("found above");
        let ids = self.place(&mut next, &it, &plan.command_id, &plan.command, &mut routes);
        let rec = &mut next.commands[ci];
        rec.suggestion_ids.extend(ids.iter().cloned());
        if it.failed || ids.is_empty() {
            rec.diagnostics.extend(it.diagnostics.iter().cloned());
        }
        self.commit(next);
        Ok(ids)
    }

    /// Grounds the command again within 60 s of `near_t`, skipping time
    /// already suggested for it. Returns the new edit ids.
    pub fn search_more(
        &mut self,
        command_id: &str,
        near_t: f64,
        interp: &Interpreter<'_>,
    ) -> Result<Vec<String>, EngineError> {
        let plan = self.plan_search(command_id, near_t)?;
        let it = plan.run(interp);
        self.apply_search(&plan, it)
    }

    pub fn undo(&mut self) -> Result<(), EngineError> {
        if self.cursor == 0 {
            return Err(EngineError::NothingToUndo);
        }
        self.cursor -= 1;
        self.revision += 1;
        Ok(())
    }

    pub fn redo(&mut self) -> Result<(), EngineError> {
        if !self.can_redo() {
            return Err(EngineError::NothingToRedo);
        }
        self.cursor += 1;
        self.revision += 1;
        Ok(())
    }
}

fn summarize(it: &Interpretation) -> String {
    let ops: Vec<&str> = it.parsed.operations.iter().map(|o| o.as_str()).collect();
    let n = it.suggestions.len();
    let mut s = format!(
        "{}: {} suggestion{}",
        ops.join("+"),
        n,
        if n == 1 { "" } else { "s" }
    );
    if it.failed {
        s.push_str(" (failed)");
    }
    s
}
