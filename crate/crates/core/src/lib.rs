//! Turns natural-language video edit commands, optionally with a sketched
//! rectangle, into grounded edit suggestions.
//!
//! A command goes through four stages:
//!
//! 1. [`parser`]: reference spans and edit operations,
//! 2. [`temporal`]: candidate segments,
//! 3. [`spatial`]: a rectangle per segment,
//! 4. [`params`]: parameters per segment and operation.
//!
//! [`engine`] runs them and keeps the editing state; [`eval`] scores them
//! against a ground-truth dataset. Model calls go through [`providers`],
//! which can answer from a live endpoint, a replay cache, or offline.
//!
//! ```
//! use framecue::engine::{Interpreter, Project};
//! use framecue::metadata::{synthesize_bundle, GeneratorSpec};
//! use framecue::parser::EditCommand;
//! use framecue::providers::Providers;
//! use framecue::temporal::SegmentIndex;
//!
//! let bundle = synthesize_bundle(&GeneratorSpec::new("demo", 120.0), 1);
//! let providers = Providers::offline(bundle.embedding_dim);
//! let index = SegmentIndex::build(&bundle, &providers).unwrap();
//! let interp = Interpreter::new(&bundle, &index, &providers);
//!
//! let mut project = Project::for_bundle("p1", &bundle);
//! let id = project.submit_command(EditCommand::new("blur 0:20-0:30"), &interp, None).unwrap();
//! let edit = project.command(&id).unwrap().suggestion_ids[0].clone();
//! project.accept(&edit).unwrap();
//! assert_eq!(project.export_edl().edits.len(), 1);
//! ```

pub mod engine;
pub mod eval;
pub mod metadata;
pub mod model;
pub mod params;
pub mod parser;
pub mod providers;
pub mod spatial;
pub mod temporal;
pub mod timecode;

pub use engine::{
    Edit, EditLayer, EditPatch, EditStatus, EngineError, Interpretation, Interpreter, Project,
};
pub use metadata::{load_bundle, load_bundle_file, MetadataBundle};
pub use model::{EditOperation, EditParameters, FrameDims, Rect, TimeInterval};
pub use parser::{EditCommand, ParsedCommand};
pub use providers::{ProviderConfig, ProviderError, ProviderMode, Providers};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/positions.md")]
    mod positions {}
    #[doc = include_str!("../../../book/src/providers.md")]
    mod providers {}
    #[doc = include_str!("../../../book/src/projects.md")]
    mod projects {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
}
