//! Endpoint handlers.

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::Json;
use framecue::engine::{EditPatch, EditStatus};
use framecue::EditCommand;

use crate::error::ApiError;
use crate::state::{check_revision, SharedState};
use crate::wire::*;

type ApiResult<T> = Result<T, ApiError>;

pub async fn health(State(st): State<SharedState>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        provider_mode: st.providers.mode(),
        projects: st.project_count(),
    })
}

pub async fn create_project(
    State(st): State<SharedState>,
    Body(req): Body<CreateProject>,
) -> ApiResult<(StatusCode, Json<ProjectWire>)> {
    let session = st.create_project(&req.bundle, req.id).await?;
    let p = session.project.lock().await;
    Ok((StatusCode::CREATED, Json(ProjectWire::new(&p))))
}

pub async fn get_project(
    State(st): State<SharedState>,
    Path(id): Path<String>,
) -> ApiResult<Json<ProjectWire>> {
    let session = st.session(&id)?;
    let p = session.project.lock().await;
    Ok(Json(ProjectWire::new(&p)))
}

pub async fn add_layer(
    State(st): State<SharedState>,
    Path(id): Path<String>,
    Body(req): Body<Revisioned>,
) -> ApiResult<(StatusCode, Json<LayerCreated>)> {
    let session = st.session(&id)?;
    let mut p = session.project.lock().await;
    check_revision(&p, req.expected_revision)?;
    let layer_id = p.add_layer();
    Ok((
        StatusCode::CREATED,
        Json(LayerCreated {
            revision: p.revision(),
            layer_id,
        }),
    ))
}

pub async fn submit_command(
    State(st): State<SharedState>,
    Path(id): Path<String>,
    Body(req): Body<SubmitCommand>,
) -> ApiResult<(StatusCode, Json<JobStatus>)> {
    let session = st.session(&id)?;
    let dims = session.bundle.frame_dims;
    let sketch = req
        .sketch
        .map(|s| rect_from_wire(s, dims, "sketch"))
        .transpose()?;
    let cmd = EditCommand {
        text: req.text,
        sketch,
        sketch_frame_t: req.sketch_frame_t,
        playhead_t: req.playhead_t,
        layer_id: req.layer_id,
    };
    let job = st
        .submit_command(session, cmd, req.parent_command_id, req.expected_revision)
        .await?;
    Ok((StatusCode::ACCEPTED, Json(job)))
}

pub async fn get_job(
    State(st): State<SharedState>,
    Path(id): Path<String>,
) -> ApiResult<Json<JobStatus>> {
    st.job(&id).map(Json)
}

pub async fn get_command(
    State(st): State<SharedState>,
    Path(id): Path<String>,
) -> ApiResult<Json<WireCommand>> {
    let session = st.session_of("command", &id)?;
    let p = session.project.lock().await;
    let rec = p
        .command(&id)
        .ok_or_else(|| ApiError::not_found("command", &id))?;
    Ok(Json(WireCommand::new(&p, rec)))
}

async fn edit_result(
    st: &SharedState,
    id: &str,
    expected_revision: Option<u64>,
    f: impl FnOnce(&mut framecue::Project) -> Result<(), ApiError>,
) -> ApiResult<Json<EditResult>> {
    let session = st.session_of("edit", id)?;
    let mut p = session.project.lock().await;
    if p.edit(id).is_none() {
        return Err(ApiError::not_found("edit", id));
    }
    check_revision(&p, expected_revision)?;
    f(&mut p)?;
    let dims = p.frame_dims();
    let layer = p
        .layers()
        .iter()
        .find(|l| l.edits.iter().any(|e| e.id == id))
        .expect("edit exists");
    let edit = layer
        .edits
        .iter()
        .find(|e| e.id == id)
        .expect("edit exists");
    Ok(Json(EditResult {
        revision: p.revision(),
        edit: WireEdit::new(edit, &layer.id, dims),
    }))
}

pub async fn accept_edit(
    State(st): State<SharedState>,
    Path(id): Path<String>,
    Body(req): Body<Revisioned>,
) -> ApiResult<Json<EditResult>> {
    edit_result(&st, &id, req.expected_revision, |p| Ok(p.accept(&id)?)).await
}

pub async fn reject_edit(
    State(st): State<SharedState>,
    Path(id): Path<String>,
    Body(req): Body<Revisioned>,
) -> ApiResult<Json<EditResult>> {
    edit_result(&st, &id, req.expected_revision, |p| Ok(p.reject(&id)?)).await
}

pub async fn patch_edit(
    State(st): State<SharedState>,
    Path(id): Path<String>,
    Body(req): Body<PatchEdit>,
) -> ApiResult<Json<EditResult>> {
    let session = st.session_of("edit", &id)?;
    let dims = session.bundle.frame_dims;
    let patch = EditPatch {
        interval: req.interval,
        rect: req
            .rect
            .map(|r| rect_from_wire(r, dims, "rect"))
            .transpose()?,
        params: req.params.map(|v| params_from_wire(v, dims)).transpose()?,
        operation: req.operation,
    };
    edit_result(&st, &id, req.expected_revision, |p| {
        Ok(p.adjust_edit(&id, &patch)?)
    })
    .await
}

pub async fn search_more(
    State(st): State<SharedState>,
    Path(id): Path<String>,
    Body(req): Body<SearchMore>,
) -> ApiResult<(StatusCode, Json<JobStatus>)> {
    let session = st.session_of("command", &id)?;
    let job = st
        .search_more(session, &id, req.near_t, req.expected_revision)
        .await?;
    Ok((StatusCode::ACCEPTED, Json(job)))
}

pub async fn timeline(
    State(st): State<SharedState>,
    Path(id): Path<String>,
) -> ApiResult<Json<Timeline>> {
    let session = st.session(&id)?;
    let p = session.project.lock().await;
    Ok(Json(Timeline::new(&p)))
}

pub async fn transcript(
    State(st): State<SharedState>,
    Path(id): Path<String>,
) -> ApiResult<Json<Transcript>> {
    let session = st.session(&id)?;
    let p = session.project.lock().await;
    let live: Vec<_> = p
        .layers()
        .iter()
        .flat_map(|l| &l.edits)
        .filter(|e| e.status != EditStatus::Rejected)
        .collect();
    let lines = session
        .bundle
        .transcript
        .iter()
        .enumerate()
        .map(|(index, seg)| TranscriptLine {
            index,
            start_s: seg.interval.start_s(),
            end_s: seg.interval.end_s(),
            text: seg.text.clone(),
            edit_ids: live
                .iter()
                .filter(|e| e.interval.intersects(&seg.interval))
                .map(|e| e.id.clone())
                .collect(),
        })
        .collect();
    Ok(Json(Transcript {
        project_id: p.id().into(),
        revision: p.revision(),
        lines,
    }))
}

pub async fn undo(
    State(st): State<SharedState>,
    Path(id): Path<String>,
    Body(req): Body<Revisioned>,
) -> ApiResult<Json<ProjectWire>> {
    let session = st.session(&id)?;
    let mut p = session.project.lock().await;
    check_revision(&p, req.expected_revision)?;
    p.undo()?;
    Ok(Json(ProjectWire::new(&p)))
}

pub async fn redo(
    State(st): State<SharedState>,
    Path(id): Path<String>,
    Body(req): Body<Revisioned>,
) -> ApiResult<Json<ProjectWire>> {
    let session = st.session(&id)?;
    let mut p = session.project.lock().await;
    check_revision(&p, req.expected_revision)?;
    p.redo()?;
    Ok(Json(ProjectWire::new(&p)))
}

/// The edit decision list, byte-identical to `Edl::to_json`.
pub async fn export(
    State(st): State<SharedState>,
    Path(id): Path<String>,
) -> ApiResult<impl IntoResponse> {
    let session = st.session(&id)?;
    let p = session.project.lock().await;
    Ok((
        [(header::CONTENT_TYPE, "application/json")],
        p.export_edl().to_json(),
    ))
}
