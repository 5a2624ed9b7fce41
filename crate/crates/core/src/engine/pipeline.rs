//! Stages 1 to 4 for one command.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::metadata::MetadataBundle;
use crate::model::{EditOperation, EditParameters, Rect, TimeInterval};
use crate::params::{interpret_params, ParamChange};
use crate::parser::{fallback_parse, parse, EditCommand, ParsedCommand};
use crate::providers::{ProviderError, Providers};
use crate::spatial::{self, SpatialResult};
use crate::temporal::{ground_all, CandidateSegment, GroundingContext, SegmentIndex};

/// One proposed edit: a candidate segment with its rectangle and
/// parameters for one operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    /// Index into [`Interpretation::candidates`].
    pub candidate: usize,
    pub operation: EditOperation,
    pub interval: TimeInterval,
    pub rect: Rect,
    pub params: EditParameters,
    pub spatial: SpatialResult,
    pub changes: Vec<ParamChange>,
    pub low_confidence: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

/// Full output of the pipeline for one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interpretation {
    pub parsed: ParsedCommand,
    pub candidates: Vec<CandidateSegment>,
    pub suggestions: Vec<Suggestion>,
    /// A stage failed outright; `suggestions` is empty.
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl Interpretation {
    fn failure(parsed: ParsedCommand, stage: &str, e: &ProviderError) -> Self {
        Interpretation {
            parsed,
            candidates: Vec::new(),
            suggestions: Vec::new(),
            failed: true,
            diagnostics: vec![format!("{stage} failed: {e}")],
        }
    }
}

/// Runs the pipeline against one bundle.
#[derive(Clone, Copy)]
pub struct Interpreter<'a> {
    pub bundle: &'a MetadataBundle,
    pub index: &'a SegmentIndex,
    pub providers: &'a Providers,
}

impl<'a> Interpreter<'a> {
    pub fn new(
        bundle: &'a MetadataBundle,
        index: &'a SegmentIndex,
        providers: &'a Providers,
    ) -> Self {
        Self {
            bundle,
            index,
            providers,
        }
    }

    /// Parses and grounds `cmd` over the whole video. Never fails; a hard
    /// provider failure gives a result with `failed` set.
    pub fn interpret(&self, cmd: &EditCommand) -> Interpretation {
        let parsed = match parse(cmd, self.providers) {
            Ok(p) => p,
            Err(e) => {
                let mut p = fallback_parse(cmd);
                p.low_confidence = true;
                return Interpretation::failure(p, "parsing", &e);
            }
        };
        self.ground(
            cmd,
            parsed,
            self.bundle.video_interval(),
            cmd.playhead_t,
            &[],
        )
    }

    /// Grounds an already parsed command inside `window`, dropping
    /// candidates that intersect any interval in `exclude`.
    pub fn ground(
        &self,
        cmd: &EditCommand,
        parsed: ParsedCommand,
        window: TimeInterval,
        playhead_t: f64,
        exclude: &[TimeInterval],
    ) -> Interpretation {
        let ctx = GroundingContext::new(
            self.bundle,
            self.index,
            self.providers,
            &parsed.resolved_text,
        )
        .with_window(window);
        let outcome = match ground_all(&ctx, &parsed.temporal_refs, playhead_t) {
            Ok(o) => o,
            Err(e) => return Interpretation::failure(parsed, "temporal grounding", &e),
        };
        let candidates: Vec<CandidateSegment> = outcome
            .candidates
            .into_iter()
            .filter(|c| !exclude.iter().any(|x| x.intersects(&c.interval)))
            .collect();
        let suggestions: Vec<Suggestion> = candidates
            .par_iter()
            .enumerate()
            .map(|(i, c)| {
                let spatial =
                    spatial::resolve(&c.interval, &parsed, cmd, self.bundle, self.providers);
                parsed
                    .operations
                    .iter()
                    .map(|&op| {
                        let p = interpret_params(
                            op,
                            &parsed,
                            &c.interval,
                            &spatial,
                            self.bundle,
                            self.providers,
                        );
                        Suggestion {
                            candidate: i,
                            operation: op,
                            interval: p.interval,
                            rect: spatial.rect,
                            params: p.params,
                            low_confidence: p.low_confidence
                                || spatial.low_confidence
                                || parsed.low_confidence,
                            spatial: spatial.clone(),
                            changes: p.changes,
                            diagnostics: p.diagnostics,
                        }
                    })
                    .collect::<Vec<_>>()
            })
            .flatten()
            .collect();
        Interpretation {
            parsed,
            candidates,
            suggestions,
            failed: false,
            diagnostics: outcome.diagnostics,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metadata::{synthesize_bundle, GeneratorSpec};

    #[test]
    fn range_command_spans_the_range() {
        let bundle = synthesize_bundle(&GeneratorSpec::new("v", 900.0), 3);
        let providers = Providers::offline(bundle.embedding_dim);
        let index = SegmentIndex::build(&bundle, &providers).unwrap();
        let it = Interpreter::new(&bundle, &index, &providers)
            .interpret(&EditCommand::new("cut 0:00-12:30"));
        assert!(!it.failed);
        assert_eq!(it.suggestions.len(), 1);
        assert_eq!(it.suggestions[0].operation, EditOperation::Cut);
        assert_eq!(
            it.suggestions[0].interval,
            TimeInterval::new(0.0, 750.0).unwrap()
        );

        let short = synthesize_bundle(&GeneratorSpec::new("v", 300.0), 3);
        let index = SegmentIndex::build(&short, &providers).unwrap();
        let it = Interpreter::new(&short, &index, &providers)
            .interpret(&EditCommand::new("cut 0:00-12:30"));
        assert_eq!(
            it.suggestions[0].interval,
            TimeInterval::new(0.0, 300.0).unwrap()
        );
    }

    #[test]
    fn one_suggestion_per_candidate_and_operation() {
        let bundle = synthesize_bundle(&GeneratorSpec::new("v", 120.0), 3);
        let providers = Providers::offline(bundle.embedding_dim);
        let index = SegmentIndex::build(&bundle, &providers).unwrap();
        let it = Interpreter::new(&bundle, &index, &providers).interpret(&EditCommand::new(
            "add a caption and blur the bottom of the screen at 0:30",
        ));
        assert_eq!(
            it.parsed.operations,
            vec![EditOperation::Text, EditOperation::Blur]
        );
        assert_eq!(it.suggestions.len(), it.candidates.len() * 2);
        for s in &it.suggestions {
            assert_eq!(s.params.operation(), s.operation);
            assert!(s.interval.within(&bundle.video_interval()));
        }
    }
}
