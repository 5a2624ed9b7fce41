//! Suggestions and the editing state built from them.

mod edl;
mod pipeline;
mod project;

pub use edl::{Edl, EdlEntry, EdlError, EdlProvenance, EDL_FORMAT, EDL_VERSION};
pub use pipeline::{Interpretation, Interpreter, Suggestion};
pub use project::{
    CommandRecord, Edit, EditLayer, EditPatch, EditStatus, EngineError, ParseSnapshot, Project,
    ProjectState, ProjectView, Provenance, SearchPlan, MAX_HISTORY, SEARCH_MORE_RADIUS_S,
};
