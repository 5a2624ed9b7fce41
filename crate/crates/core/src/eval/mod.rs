//! Ground-truth datasets and the metric suite.

mod dataset;
mod metrics;
mod run;
mod synth;

pub use dataset::{
    dataset_to_json, load_dataset, load_dataset_file, Dataset, DatasetError, Exclusion,
    GroundTruthEntry, GtParse, GtSegment, RawEntry, DATASET_FORMAT, DATASET_VERSION,
};
pub use metrics::{
    aggregate_miou, entry_miou, f1, mean_std, operation_prf, parse_similarity, spatial_miou,
    temporal_prf, Prf, RectPair, SpatialScore, MIOU_THRESHOLD, TEMPORAL_MARGIN_S,
};
pub use run::{
    run_evaluation, EntryReport, EvalCorpus, MeanStd, MetricsReport, ParseScores, SpatialSummary,
    REPORT_FORMAT, REPORT_VERSION,
};
pub use synth::{synthesize_suite, SyntheticSuite};

#[cfg(test)]
mod tests;
