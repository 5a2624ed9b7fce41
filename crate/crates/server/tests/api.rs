use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use framecue::engine::{Edl, Interpreter};
use framecue::metadata::{synthesize_bundle, GeneratorSpec};
use framecue::providers::{ProviderMode, Providers, RecordingChat, RecordingEmbedder, ReplayCache};
use framecue::temporal::SegmentIndex;
use framecue::EditCommand;
use framecue_server::{build_state, router, ErrorCode, ServerConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Fixture {
    _dir: tempfile::TempDir,
    app: Router,
}

fn write_bundle(dir: &std::path::Path) {
    let bundle = synthesize_bundle(&GeneratorSpec::new("vid", 120.0), 3);
    std::fs::write(dir.join("vid.json"), bundle.to_json()).unwrap();
}

fn fixture_with(f: impl FnOnce(&mut ServerConfig)) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    write_bundle(dir.path());
    let mut cfg = ServerConfig::offline(dir.path());
    f(&mut cfg);
    let app = router(build_state(cfg).unwrap());
    Fixture { _dir: dir, app }
}

fn fixture() -> Fixture {
    fixture_with(|_| {})
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    call_auth(app, method, uri, body, None).await
}

async fn call_auth(
    app: &Router,
    method: Method,
    uri: &str,
    body: Option<Value>,
    token: Option<&str>,
) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, v)
}

async fn raw(app: &Router, method: Method, uri: &str, body: &str) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (
        status,
        resp.into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec(),
    )
}

async fn project(app: &Router) -> String {
    let (s, v) = call(
        app,
        Method::POST,
        "/projects",
        Some(json!({"bundle": "vid.json"})),
    )
    .await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    v["id"].as_str().unwrap().to_string()
}

/// Submits a command and returns (command id, suggestion ids).
async fn submit(app: &Router, pid: &str, body: Value) -> (String, Vec<String>) {
    let (s, job) = call(
        app,
        Method::POST,
        &format!("/projects/{pid}/commands"),
        Some(body),
    )
    .await;
    assert_eq!(s, StatusCode::ACCEPTED, "{job}");
    assert_eq!(job["state"], "done", "{job}");
    let ids = job["edit_ids"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    (job["command_id"].as_str().unwrap().to_string(), ids)
}

async fn revision(app: &Router, pid: &str) -> u64 {
    call(app, Method::GET, &format!("/projects/{pid}"), None)
        .await
        .1["revision"]
        .as_u64()
        .unwrap()
}

#[tokio::test]
async fn health_ok_and_concurrent() {
    let fx = fixture();
    let (s, v) = call(&fx.app, Method::GET, "/health", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["provider_mode"], "oracle");
    let all = (0..32).map(|_| {
        let app = fx.app.clone();
        async move { call(&app, Method::GET, "/health", None).await }
    });
    for (s, _) in futures_join(all).await {
        assert_eq!(s, StatusCode::OK);
    }
}

async fn futures_join<F: std::future::Future + Send + 'static>(
    fs: impl Iterator<Item = F>,
) -> Vec<F::Output>
where
    F::Output: Send + 'static,
{
    let handles: Vec<_> = fs.map(tokio::spawn).collect();
    let mut out = Vec::new();
    for h in handles {
        out.push(h.await.unwrap());
    }
    out
}

#[tokio::test]
async fn project_lifecycle() {
    let fx = fixture();
    let pid = project(&fx.app).await;
    let (s, v) = call(&fx.app, Method::GET, &format!("/projects/{pid}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["video_id"], "vid");
    assert_eq!(v["revision"], 0);
    assert_eq!(v["frame_dims"], json!({"width_px": 1280, "height_px": 720}));

    let (s, v) = call(&fx.app, Method::GET, "/projects/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "not_found");

    let (s, v) = call(
        &fx.app,
        Method::POST,
        "/projects",
        Some(json!({"bundle": "../etc/passwd"})),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["details"]["field"], "bundle");
    let (s, _) = call(
        &fx.app,
        Method::POST,
        "/projects",
        Some(json!({"bundle": "missing.json"})),
    )
    .await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let (s, _) = call(
        &fx.app,
        Method::POST,
        "/projects",
        Some(json!({"bundle": "vid.json", "id": "mine"})),
    )
    .await;
    assert_eq!(s, StatusCode::CREATED);
    let (s, v) = call(
        &fx.app,
        Method::POST,
        "/projects",
        Some(json!({"bundle": "vid.json", "id": "mine"})),
    )
    .await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["code"], "conflict");
    let (s, _) = call(
        &fx.app,
        Method::POST,
        "/projects",
        Some(json!({"bundle": "vid.json", "id": "a-b"})),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);

    let (s, v) = call(
        &fx.app,
        Method::POST,
        &format!("/projects/{pid}/layers"),
        None,
    )
    .await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["revision"], 1);
    assert_eq!(v["layer_id"], format!("{pid}-l1"));
}

#[tokio::test]
async fn command_job_and_breakdown() {
    let fx = fixture();
    let pid = project(&fx.app).await;
    let (s, job) = call(
        &fx.app,
        Method::POST,
        &format!("/projects/{pid}/commands"),
        Some(json!({"text": "blur 0:20-0:30", "sketch": {"x": 0, "y": 360, "width": 1280, "height": 360}, "sketch_frame_t": 25.0, "playhead_t": 0.0})),
    )
    .await;
    assert_eq!(s, StatusCode::ACCEPTED);
    assert_eq!(job["state"], "done");
    let job_id = job["job_id"].as_str().unwrap();
    let (s, polled) = call(&fx.app, Method::GET, &format!("/jobs/{job_id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(polled, job);

    let cid = job["command_id"].as_str().unwrap();
    let (s, rec) = call(&fx.app, Method::GET, &format!("/commands/{cid}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(rec["text"], "blur 0:20-0:30");
    assert_eq!(
        rec["sketch"],
        json!({"x": 0, "y": 360, "width": 1280, "height": 360})
    );
    assert_eq!(rec["parse"]["operations"], json!(["blur"]));
    let sugg = rec["suggestions"].as_array().unwrap();
    assert_eq!(sugg.len(), 1);
    assert_eq!(sugg[0]["start_s"], 20.0);
    assert_eq!(sugg[0]["end_s"], 30.0);
    assert_eq!(sugg[0]["status"], "suggested");
    assert_eq!(
        sugg[0]["rect"],
        json!({"x": 0, "y": 360, "width": 1280, "height": 360})
    );
    assert_eq!(sugg[0]["provenance"]["spatial_method"], "sketch");

    let (s, v) = call(&fx.app, Method::GET, "/jobs/job-999", None).await;
    assert_eq!(
        (s, v["code"].clone()),
        (StatusCode::NOT_FOUND, json!("not_found"))
    );
    let (s, _) = call(&fx.app, Method::GET, &format!("/commands/{pid}-c9"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn invalid_commands_fail_synchronously() {
    let fx = fixture();
    let pid = project(&fx.app).await;
    let uri = format!("/projects/{pid}/commands");
    let (s, v) = call(&fx.app, Method::POST, &uri, Some(json!({"text": "  "}))).await;
    assert_eq!(
        (s, v["code"].clone()),
        (StatusCode::UNPROCESSABLE_ENTITY, json!("validation_failed"))
    );
    let (s, v) = call(
        &fx.app,
        Method::POST,
        &uri,
        Some(json!({"text": "blur it", "sketch": {"x": 1200, "y": 0, "width": 200, "height": 100}, "sketch_frame_t": 1.0})),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["details"]["field"], "sketch");
    let (s, v) = call(
        &fx.app,
        Method::POST,
        &uri,
        Some(json!({"text": "blur", "layer_id": "zzz"})),
    )
    .await;
    assert_eq!(
        (s, v["code"].clone()),
        (StatusCode::NOT_FOUND, json!("not_found"))
    );
    let (s, v) = call(
        &fx.app,
        Method::POST,
        &uri,
        Some(json!({"text": "blur", "playhead_t": "soon"})),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["details"]["field"], "playhead_t");
    let (s, v) = call(
        &fx.app,
        Method::POST,
        &uri,
        Some(json!({"text": "blur", "colour": 1})),
    )
    .await;
    assert_eq!(
        (s, v["code"].clone()),
        (StatusCode::UNPROCESSABLE_ENTITY, json!("validation_failed"))
    );
    let (s, v) = raw(&fx.app, Method::POST, &uri, "{not json").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(
        serde_json::from_slice::<Value>(&v).unwrap()["code"],
        "bad_request"
    );
    assert_eq!(revision(&fx.app, &pid).await, 0);
}

#[tokio::test]
async fn stale_revision_conflicts_without_mutation() {
    let fx = fixture();
    let pid = project(&fx.app).await;
    let (_, ids) = submit(&fx.app, &pid, json!({"text": "blur 0:20-0:30"})).await;
    let rev = revision(&fx.app, &pid).await;
    let (s, v) = call(
        &fx.app,
        Method::POST,
        &format!("/edits/{}/accept", ids[0]),
        Some(json!({"expected_revision": rev - 1})),
    )
    .await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["code"], "conflict");
    assert_eq!(v["details"]["revision"], rev);
    assert_eq!(revision(&fx.app, &pid).await, rev);
    let (_, p) = call(&fx.app, Method::GET, &format!("/projects/{pid}"), None).await;
    assert_eq!(p["layers"][0]["edits"][0]["status"], "suggested");

    let (s, v) = call(
        &fx.app,
        Method::POST,
        &format!("/edits/{}/accept", ids[0]),
        Some(json!({"expected_revision": rev})),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["revision"], rev + 1);
    assert_eq!(v["edit"]["status"], "accepted");
    let (s, v) = call(
        &fx.app,
        Method::POST,
        &format!("/edits/{}/reject", ids[0]),
        None,
    )
    .await;
    assert_eq!(
        (s, v["code"].clone()),
        (StatusCode::CONFLICT, json!("illegal_transition"))
    );
    let (s, _) = call(
        &fx.app,
        Method::POST,
        &format!("/edits/{pid}-e77/accept"),
        None,
    )
    .await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn concurrent_accepts_with_one_revision_admit_exactly_one() {
    let fx = fixture();
    let pid = project(&fx.app).await;
    let mut ids = Vec::new();
    for t in [
        "blur 0:00-0:05",
        "blur 0:10-0:15",
        "blur 0:20-0:25",
        "blur 0:30-0:35",
    ] {
        ids.extend(submit(&fx.app, &pid, json!({"text": t})).await.1);
    }
    let rev = revision(&fx.app, &pid).await;
    let app = fx.app.clone();
    let results = futures_join(ids.clone().into_iter().map(move |id| {
        let app = app.clone();
        async move {
            call(
                &app,
                Method::POST,
                &format!("/edits/{id}/accept"),
                Some(json!({"expected_revision": rev})),
            )
            .await
            .0
        }
    }))
    .await;
    assert_eq!(results.iter().filter(|s| **s == StatusCode::OK).count(), 1);
    assert_eq!(
        results
            .iter()
            .filter(|s| **s == StatusCode::CONFLICT)
            .count(),
        ids.len() - 1
    );
    assert_eq!(revision(&fx.app, &pid).await, rev + 1);
}

#[tokio::test]
async fn patch_edit_validation() {
    let fx = fixture();
    let pid = project(&fx.app).await;
    let (_, a) = submit(&fx.app, &pid, json!({"text": "blur 0:20-0:30"})).await;
    let (_, b) = submit(&fx.app, &pid, json!({"text": "blur 0:40-0:50"})).await;
    let uri = format!("/edits/{}", a[0]);

    let (s, v) = call(
        &fx.app,
        Method::PATCH,
        &uri,
        Some(json!({"rect": {"x": 1000, "y": 0, "width": 400, "height": 100}})),
    )
    .await;
    assert_eq!(
        (s, v["code"].clone()),
        (StatusCode::UNPROCESSABLE_ENTITY, json!("validation_failed"))
    );
    assert_eq!(v["details"]["field"], "rect");
    let (s, v) = call(
        &fx.app,
        Method::PATCH,
        &uri,
        Some(json!({"params": {"operation": "blur", "degree": "lots"}})),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["details"]["field"], "params.degree");
    let (s, v) = call(
        &fx.app,
        Method::PATCH,
        &uri,
        Some(json!({"params": {"operation": "blur", "degree": 3.0}})),
    )
    .await;
    assert_eq!(
        (s, v["code"].clone()),
        (StatusCode::UNPROCESSABLE_ENTITY, json!("schema_mismatch"))
    );
    let (s, v) = call(
        &fx.app,
        Method::PATCH,
        &uri,
        Some(json!({"interval": {"start_s": 100.0, "end_s": 130.0}})),
    )
    .await;
    assert_eq!(
        (s, v["code"].clone()),
        (StatusCode::UNPROCESSABLE_ENTITY, json!("out_of_bounds"))
    );
    let (s, v) = call(
        &fx.app,
        Method::PATCH,
        &uri,
        Some(json!({"interval": {"start_s": 10.0, "end_s": 5.0}})),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["details"]["field"], "interval");
    assert_eq!(revision(&fx.app, &pid).await, 2);

    let (s, v) = call(
        &fx.app,
        Method::PATCH,
        &uri,
        Some(json!({"rect": {"x": 64, "y": 72, "width": 640, "height": 360}, "params": {"operation": "blur", "degree": 0.8}})),
    )
    .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(
        v["edit"]["rect"],
        json!({"x": 64, "y": 72, "width": 640, "height": 360})
    );
    assert_eq!(v["edit"]["params"]["degree"], 0.8);

    call(
        &fx.app,
        Method::POST,
        &format!("/edits/{}/accept", b[0]),
        None,
    )
    .await;
    let (s, v) = call(
        &fx.app,
        Method::PATCH,
        &uri,
        Some(json!({"interval": {"start_s": 35.0, "end_s": 45.0}})),
    )
    .await;
    assert_eq!(
        (s, v["code"].clone()),
        (StatusCode::CONFLICT, json!("overlap_violation"))
    );
    assert_eq!(v["details"]["conflicting_id"], b[0]);

    let (s, v) = call(
        &fx.app,
        Method::PATCH,
        &uri,
        Some(json!({"operation": "crop", "params": {"operation": "crop", "crop_rect": {"x": 0, "y": 0, "width": 640, "height": 720}}})),
    )
    .await;
    // The layer holds two blur edits, so neither can change operation.
    assert_eq!(
        (s, v["code"].clone()),
        (StatusCode::UNPROCESSABLE_ENTITY, json!("schema_mismatch"))
    );
}

#[tokio::test]
async fn crop_params_travel_in_pixels() {
    let fx = fixture();
    let pid = project(&fx.app).await;
    let (_, ids) = submit(&fx.app, &pid, json!({"text": "crop 0:20-0:30"})).await;
    let uri = format!("/edits/{}", ids[0]);
    let (s, v) = call(
        &fx.app,
        Method::PATCH,
        &uri,
        Some(json!({"params": {"operation": "crop", "crop_rect": {"x": 0, "y": 0, "width": 640, "height": 720}}})),
    )
    .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(
        v["edit"]["params"]["crop_rect"],
        json!({"x": 0, "y": 0, "width": 640, "height": 720})
    );
    let (s, v) = call(
        &fx.app,
        Method::PATCH,
        &uri,
        Some(json!({"params": {"operation": "crop", "crop_rect": {"x": 0, "y": 0, "width": 2000, "height": 720}}})),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["details"]["field"], "params.crop_rect");
}

#[tokio::test]
async fn undo_redo_and_export() {
    let fx = fixture();
    let pid = project(&fx.app).await;
    let (s, v) = call(
        &fx.app,
        Method::POST,
        &format!("/projects/{pid}/undo"),
        None,
    )
    .await;
    assert_eq!(
        (s, v["code"].clone()),
        (StatusCode::CONFLICT, json!("nothing_to_undo"))
    );
    let (_, ids) = submit(&fx.app, &pid, json!({"text": "blur 0:20-0:30"})).await;
    call(
        &fx.app,
        Method::POST,
        &format!("/edits/{}/accept", ids[0]),
        None,
    )
    .await;
    let (_, before) = call(
        &fx.app,
        Method::GET,
        &format!("/projects/{pid}/export"),
        None,
    )
    .await;
    let edl: Edl = serde_json::from_value(before.clone()).unwrap();
    edl.validate().unwrap();
    assert_eq!(edl.edits.len(), 1);
    assert_eq!(edl.edits[0].start_s, 20.0);

    let (s, v) = call(
        &fx.app,
        Method::POST,
        &format!("/projects/{pid}/undo"),
        None,
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["layers"][0]["edits"][0]["status"], "suggested");
    assert_eq!(v["can_redo"], true);
    let (_, undone) = call(
        &fx.app,
        Method::GET,
        &format!("/projects/{pid}/export"),
        None,
    )
    .await;
    assert_eq!(undone["edits"], json!([]));
    let (s, _) = call(
        &fx.app,
        Method::POST,
        &format!("/projects/{pid}/redo"),
        None,
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    let (s, text) = raw(&fx.app, Method::GET, &format!("/projects/{pid}/export"), "").await;
    assert_eq!(s, StatusCode::OK);
    let text = String::from_utf8(text).unwrap();
    assert_eq!(text, Edl::from_json(&text).unwrap().to_json());
    assert_eq!(serde_json::from_str::<Value>(&text).unwrap(), before);
    let (s, v) = call(
        &fx.app,
        Method::POST,
        &format!("/projects/{pid}/redo"),
        None,
    )
    .await;
    assert_eq!(
        (s, v["code"].clone()),
        (StatusCode::CONFLICT, json!("nothing_to_redo"))
    );
}

#[tokio::test]
async fn timeline_and_transcript_markers() {
    let fx = fixture();
    let pid = project(&fx.app).await;
    let (cid, ids) = submit(&fx.app, &pid, json!({"text": "blur 0:20-0:30"})).await;
    let (s, tl) = call(
        &fx.app,
        Method::GET,
        &format!("/projects/{pid}/timeline"),
        None,
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(tl["duration_s"], 120.0);
    let e = &tl["layers"][0]["edits"][0];
    assert_eq!(
        (e["id"].as_str().unwrap(), e["command_id"].as_str().unwrap()),
        (ids[0].as_str(), cid.as_str())
    );

    let (_, tr) = call(
        &fx.app,
        Method::GET,
        &format!("/projects/{pid}/transcript"),
        None,
    )
    .await;
    let lines = tr["lines"].as_array().unwrap();
    assert_eq!(lines.len(), 24);
    for l in lines {
        let (a, b) = (l["start_s"].as_f64().unwrap(), l["end_s"].as_f64().unwrap());
        let marked = !l["edit_ids"].as_array().unwrap().is_empty();
        assert_eq!(marked, a < 30.0 && b > 20.0, "line {l}");
    }
    call(
        &fx.app,
        Method::POST,
        &format!("/edits/{}/reject", ids[0]),
        None,
    )
    .await;
    let (_, tr) = call(
        &fx.app,
        Method::GET,
        &format!("/projects/{pid}/transcript"),
        None,
    )
    .await;
    assert!(tr["lines"]
        .as_array()
        .unwrap()
        .iter()
        .all(|l| l["edit_ids"] == json!([])));
}

#[tokio::test]
async fn search_more_job() {
    let fx = fixture();
    let pid = project(&fx.app).await;
    let (cid, _) = submit(&fx.app, &pid, json!({"text": "blur 0:20-0:30"})).await;
    let uri = format!("/commands/{cid}/search-more");
    let (s, job) = call(&fx.app, Method::POST, &uri, Some(json!({"near_t": 25.0}))).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    assert_eq!(job["kind"], "search_more");
    assert_eq!(job["state"], "done");
    assert_eq!(job["command_id"], cid);
    let (s, v) = call(&fx.app, Method::POST, &uri, Some(json!({"near_t": 500.0}))).await;
    assert_eq!(
        (s, v["code"].clone()),
        (StatusCode::UNPROCESSABLE_ENTITY, json!("out_of_bounds"))
    );
    let (s, v) = call(&fx.app, Method::POST, &uri, Some(json!({}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "validation_failed");
}

#[tokio::test]
async fn bearer_token() {
    let fx = fixture_with(|c| c.auth_token = Some("s3cret".into()));
    let (s, _) = call(&fx.app, Method::GET, "/health", None).await;
    assert_eq!(s, StatusCode::OK);
    let (s, v) = call(
        &fx.app,
        Method::POST,
        "/projects",
        Some(json!({"bundle": "vid.json"})),
    )
    .await;
    assert_eq!(
        (s, v["code"].clone()),
        (StatusCode::UNAUTHORIZED, json!("unauthorized"))
    );
    let (s, _) = call_auth(
        &fx.app,
        Method::POST,
        "/projects",
        Some(json!({"bundle": "vid.json"})),
        Some("nope"),
    )
    .await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    let (s, _) = call_auth(
        &fx.app,
        Method::POST,
        "/projects",
        Some(json!({"bundle": "vid.json"})),
        Some("s3cret"),
    )
    .await;
    assert_eq!(s, StatusCode::CREATED);
}

#[tokio::test]
async fn unknown_route_has_error_body() {
    let fx = fixture();
    let (s, v) = call(&fx.app, Method::GET, "/nowhere", None).await;
    assert_eq!(
        (s, v["code"].clone()),
        (StatusCode::NOT_FOUND, json!("not_found"))
    );
}

#[test]
fn error_codes_are_snake_case() {
    let names: Vec<Value> = ErrorCode::ALL
        .iter()
        .map(|c| serde_json::to_value(c).unwrap())
        .collect();
    assert_eq!(
        names,
        json!([
            "not_found",
            "conflict",
            "overlap_violation",
            "illegal_transition",
            "validation_failed",
            "out_of_bounds",
            "schema_mismatch",
            "nothing_to_undo",
            "nothing_to_redo",
            "bad_request",
            "unauthorized",
            "provider_error",
            "internal"
        ])
        .as_array()
        .unwrap()
        .clone()
    );
}

#[tokio::test]
async fn replay_mode_serves_recorded_session() {
    let dir = tempfile::tempdir().unwrap();
    write_bundle(dir.path());
    let cache_path = dir.path().join("cache.jsonl");
    {
        let bundle = framecue::load_bundle_file(dir.path().join("vid.json")).unwrap();
        let offline = Providers::offline(bundle.embedding_dim);
        let cache = Arc::new(ReplayCache::open_append(&cache_path).unwrap());
        let rec = Providers::new(
            ProviderMode::Oracle,
            Arc::new(RecordingChat::new(
                offline.chat_backend().clone(),
                cache.clone(),
            )),
            Arc::new(RecordingEmbedder::new(offline.embedder().clone(), cache)),
        );
        let index = SegmentIndex::build(&bundle, &rec).unwrap();
        Interpreter::new(&bundle, &index, &rec).interpret(&EditCommand::new("blur 0:20-0:30"));
    }
    let toml = format!(
        "bundle_dir = {:?}\n[provider]\nmode = \"replay\"\nreplay_cache = {:?}\n",
        dir.path(),
        cache_path
    );
    let app = router(build_state(ServerConfig::from_toml(&toml).unwrap()).unwrap());
    let (s, v) = call(&app, Method::GET, "/health", None).await;
    assert_eq!(
        (s, v["provider_mode"].clone()),
        (StatusCode::OK, json!("replay"))
    );
    let pid = project(&app).await;
    let (_, ids) = submit(&app, &pid, json!({"text": "blur 0:20-0:30"})).await;
    assert_eq!(ids.len(), 1);
}
