use super::*;
use crate::metadata::{synthesize_bundle, GeneratorSpec};
use crate::providers::Providers;
use serde_json::json;

fn entry(id: &str, ops: &[&str], self_contained: bool, cats: &[&str]) -> serde_json::Value {
    json!({
        "id": id,
        "video_id": "vid",
        "self_contained": self_contained,
        "temporal_categories": cats,
        "command": {"text": "blur the mug at 0:10"},
        "gt_parse": {"temporal_texts": ["0:10"], "spatial_texts": ["the mug"], "operation_texts": ["blur"], "parameter_texts": []},
        "gt_segments": [{"start_s": 5.0, "end_s": 15.0, "rect": {"x": 0.1, "y": 0.1, "w": 0.2, "h": 0.2}}],
        "gt_operations": ops,
    })
}

fn doc(entries: Vec<serde_json::Value>) -> String {
    json!({"format": DATASET_FORMAT, "version": DATASET_VERSION, "entries": entries}).to_string()
}

#[test]
fn loads_valid_entries() {
    let text = doc(vec![
        entry("a", &["blur"], true, &["position"]),
        entry("b", &["text", "zoom"], true, &["transcript"]),
        entry("c", &["cut"], true, &["video", "position"]),
    ]);
    let d = load_dataset(text.as_bytes()).unwrap();
    assert_eq!(d.entries.len(), 3);
    assert!(d.excluded.is_empty());
    let again = load_dataset(dataset_to_json(&d.entries).as_bytes()).unwrap();
    assert_eq!(again.entries, d.entries);
}

#[test]
fn excludes_entries_failing_criteria() {
    let mut bad_rect = entry("e", &["blur"], true, &["position"]);
    bad_rect["gt_segments"][0]["rect"]["w"] = json!(2.0);
    let text = doc(vec![
        entry("a", &["blur"], true, &["position"]),
        entry("b", &["recolor"], true, &["position"]),
        entry("c", &["blur"], false, &["position"]),
        entry("d", &["blur"], true, &["other"]),
        bad_rect,
        entry("f", &[], true, &["position"]),
    ]);
    let d = load_dataset(text.as_bytes()).unwrap();
    assert_eq!(d.entries.len(), 1);
    let ids: Vec<&str> = d.excluded.iter().map(|x| x.id.as_str()).collect();
    assert_eq!(ids, vec!["b", "c", "d", "e", "f"]);
    assert!(d.excluded[0].reason.contains("recolor"));
    assert!(d.excluded[3].reason.contains("gt_segments"));
}

#[test]
fn rejects_foreign_documents() {
    assert!(load_dataset(r#"{"format": "x", "version": 1, "entries": []}"#.as_bytes()).is_err());
    assert!(load_dataset("[]".as_bytes()).is_err());
    let dup = doc(vec![
        entry("a", &["blur"], true, &["position"]),
        entry("a", &["blur"], true, &["position"]),
    ]);
    assert!(matches!(
        load_dataset(dup.as_bytes()),
        Err(DatasetError::DuplicateId(_))
    ));
}

#[test]
fn ground_truth_oracle_scores_perfectly() {
    let bundle = synthesize_bundle(&GeneratorSpec::new("syn", 100.0), 7);
    let suite = synthesize_suite(&bundle, 10, 1);
    let providers = suite.oracle_providers(bundle.embedding_dim);
    let corpus = EvalCorpus::build(vec![bundle], &providers).unwrap();
    let ds = Dataset {
        entries: suite.entries.clone(),
        excluded: vec![],
    };
    let r = run_evaluation(&ds, &corpus, &providers);
    assert_eq!(
        r.entries_failed,
        0,
        "{:?}",
        r.per_entry
            .iter()
            .map(|e| &e.diagnostics)
            .collect::<Vec<_>>()
    );
    assert_eq!(r.temporal_strict.f1, 1.0, "{:#?}", r.per_entry);
    assert_eq!(r.operation.f1, 1.0);
    assert_eq!(
        r.spatial.miou_mean,
        1.0,
        "{:#?}",
        r.per_entry.iter().map(|e| e.miou).collect::<Vec<_>>()
    );
    assert_eq!(r.parsing.temporal.mean, 1.0);
}

#[test]
fn evaluation_is_deterministic_and_handles_failures() {
    let bundle = synthesize_bundle(&GeneratorSpec::new("syn", 100.0), 7);
    let suite = synthesize_suite(&bundle, 6, 2);
    let providers = Providers::offline(bundle.embedding_dim);
    let corpus = EvalCorpus::build(vec![bundle], &providers).unwrap();
    let mut entries = suite.entries.clone();
    entries[0].video_id = "missing".into();
    let ds = Dataset {
        entries,
        excluded: vec![],
    };
    let a = run_evaluation(&ds, &corpus, &providers);
    let b = run_evaluation(&ds, &corpus, &providers);
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.entries_failed, 1);
    assert!(a.per_entry[0].failed);
    assert_eq!(a.per_entry[0].temporal_strict, Prf::ZERO);
    assert_eq!(a.per_entry[0].miou, Some(0.0));
    assert!(a.to_table().contains("temporal (strict)"));

    let empty = run_evaluation(&Dataset::default(), &corpus, &providers);
    assert_eq!(empty.entries_evaluated, 0);
    assert_eq!(empty.warnings.len(), 1);
}
