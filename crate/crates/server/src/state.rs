//! Sessions and jobs.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use framecue::engine::{Interpreter, Project};
use framecue::metadata::MetadataBundle;
use framecue::providers::{ProviderMode, Providers};
use framecue::temporal::SegmentIndex;
use framecue::EditCommand;
use tokio::sync::{Mutex, Semaphore};

use crate::config::ServerConfig;
use crate::error::{ApiError, ErrorCode};
use crate::wire::{JobKind, JobState, JobStatus};

/// One registered video and its editing state. Mutations go through the
/// project mutex, which queues writers in arrival order.
pub struct Session {
    pub bundle: Arc<MetadataBundle>,
    pub index: Arc<SegmentIndex>,
    pub project: Mutex<Project>,
}

pub struct AppState {
    pub config: ServerConfig,
    pub providers: Arc<Providers>,
    sessions: RwLock<BTreeMap<String, Arc<Session>>>,
    jobs: RwLock<BTreeMap<String, JobStatus>>,
    workers: Arc<Semaphore>,
    next_project: AtomicU64,
    next_job: AtomicU64,
}

pub type SharedState = Arc<AppState>;

/// Fails with `conflict` when the client saw a different revision.
pub fn check_revision(p: &Project, expected: Option<u64>) -> Result<(), ApiError> {
    match expected {
        Some(r) if r != p.revision() => Err(ApiError::conflict(r, p.revision())),
        _ => Ok(()),
    }
}

/// Project id an edit or command id belongs to: ids look like
/// `{project}-e3` or `{project}-c0`.
pub fn owner_of(id: &str) -> Option<&str> {
    id.rsplit_once('-').map(|(p, _)| p)
}

fn valid_project_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl AppState {
    pub fn new(config: ServerConfig, providers: Providers) -> Self {
        let workers = config.workers.max(1);
        AppState {
            config,
            providers: Arc::new(providers),
            sessions: RwLock::new(BTreeMap::new()),
            jobs: RwLock::new(BTreeMap::new()),
            workers: Arc::new(Semaphore::new(workers)),
            next_project: AtomicU64::new(1),
            next_job: AtomicU64::new(1),
        }
    }

    pub fn project_count(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    pub fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("project", id))
    }

    /// Session owning an edit or command id.
    pub fn session_of(&self, kind: &str, id: &str) -> Result<Arc<Session>, ApiError> {
        owner_of(id)
            .and_then(|p| self.sessions.read().unwrap().get(p).cloned())
            .ok_or_else(|| ApiError::not_found(kind, id))
    }

    /// Loads a bundle from the bundle directory and registers a project
    /// for it.
    pub async fn create_project(
        &self,
        bundle_name: &str,
        id: Option<String>,
    ) -> Result<Arc<Session>, ApiError> {
        let plain = std::path::Path::new(bundle_name)
            .file_name()
            .is_some_and(|f| f == std::ffi::OsStr::new(bundle_name));
        if !plain || bundle_name.starts_with('.') {
            return Err(ApiError::validation(
                "bundle",
                "bundle must be a file name inside the bundle directory",
            ));
        }
        let id = match id {
            Some(id) if !valid_project_id(&id) => {
                return Err(ApiError::validation(
                    "id",
                    "id must be 1-64 ASCII letters, digits or underscores",
                ))
            }
            Some(id) => id,
            None => loop {
                let id = format!("p{}", self.next_project.fetch_add(1, Ordering::Relaxed));
                if !self.sessions.read().unwrap().contains_key(&id) {
                    break id;
                }
            },
        };
        let path = self.config.bundle_dir.join(bundle_name);
        if !path.is_file() {
            return Err(ApiError::not_found("bundle", bundle_name));
        }
        let providers = self.providers.clone();
        let (bundle, index) = tokio::task::spawn_blocking(move || {
            let bundle = framecue::load_bundle_file(&path)
                .map_err(|e| ApiError::validation("bundle", e.to_string()))?;
            let index = SegmentIndex::build(&bundle, &providers)
                .map_err(|e| ApiError::new(ErrorCode::ProviderError, e.to_string()))?;
            Ok::<_, ApiError>((bundle, index))
        })
        .await
        .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))??;
        let session = Arc::new(Session {
            project: Mutex::new(Project::for_bundle(id.clone(), &bundle)),
            bundle: Arc::new(bundle),
            index: Arc::new(index),
        });
        let mut sessions = self.sessions.write().unwrap();
        if sessions.contains_key(&id) {
            return Err(
                ApiError::new(ErrorCode::Conflict, format!("project {id} already exists"))
                    .with_details(serde_json::json!({ "id": id })),
            );
        }
        sessions.insert(id, session.clone());
        Ok(session)
    }

    pub fn job(&self, id: &str) -> Result<JobStatus, ApiError> {
        self.jobs
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("job", id))
    }

    fn new_job(&self, project_id: &str, kind: JobKind, command_id: Option<String>) -> JobStatus {
        let job = JobStatus {
            job_id: format!("job-{}", self.next_job.fetch_add(1, Ordering::Relaxed)),
            project_id: project_id.into(),
            kind,
            state: JobState::Pending,
            command_id,
            edit_ids: Vec::new(),
            diagnostics: Vec::new(),
        };
        self.jobs
            .write()
            .unwrap()
            .insert(job.job_id.clone(), job.clone());
        job
    }

    /// Applies `f` unless the job already reached a terminal state.
    fn update_job(&self, id: &str, f: impl FnOnce(&mut JobStatus)) {
        if let Some(j) = self.jobs.write().unwrap().get_mut(id) {
            if !j.state.is_terminal() {
                f(j);
            }
        }
    }

    /// Starts a command job. Validation happens before the job exists, so
    /// invalid requests fail synchronously. Outside live mode the job has
    /// finished when this returns.
    pub async fn submit_command(
        self: &Arc<Self>,
        session: Arc<Session>,
        cmd: EditCommand,
        parent: Option<String>,
        expected_revision: Option<u64>,
    ) -> Result<JobStatus, ApiError> {
        let project_id = {
            let p = session.project.lock().await;
            check_revision(&p, expected_revision)?;
            p.check_command(&cmd, parent.as_deref())?;
            p.id().to_string()
        };
        let job = self.new_job(&project_id, JobKind::Command, None);
        let state = self.clone();
        let job_id = job.job_id.clone();
        let handle = tokio::spawn(async move {
            let _permit = state
                .workers
                .clone()
                .acquire_owned()
                .await
                .expect("semaphore open");
            state.update_job(&job_id, |j| j.state = JobState::Running);
            let (s, c, providers) = (session.clone(), cmd.clone(), state.providers.clone());
            let it = tokio::task::spawn_blocking(move || {
                Interpreter::new(&s.bundle, &s.index, &providers).interpret(&c)
            })
            .await;
            let outcome = match it {
                Err(e) => Err(e.to_string()),
                Ok(it) => {
                    let mut p = session.project.lock().await;
                    p.apply_interpretation(cmd, it, parent.as_deref())
                        .map(|id| {
                            let ids = p
                                .command(&id)
                                .map(|c| c.suggestion_ids.clone())
                                .unwrap_or_default();
                            let diags = p
                                .command(&id)
                                .map(|c| c.diagnostics.clone())
                                .unwrap_or_default();
                            (id, ids, diags)
                        })
                        .map_err(|e| e.to_string())
                }
            };
            state.update_job(&job_id, |j| match outcome {
                Ok((id, ids, diags)) => {
                    j.state = JobState::Done;
                    j.command_id = Some(id);
                    j.edit_ids = ids;
                    j.diagnostics = diags;
                }
                Err(e) => {
                    j.state = JobState::Failed;
                    j.diagnostics.push(e);
                }
            });
        });
        self.finish(job, handle).await
    }

    /// Starts a search-more job for `command_id` near `near_t`.
    pub async fn search_more(
        self: &Arc<Self>,
        session: Arc<Session>,
        command_id: &str,
        near_t: f64,
        expected_revision: Option<u64>,
    ) -> Result<JobStatus, ApiError> {
        let (project_id, plan) = {
            let p = session.project.lock().await;
            check_revision(&p, expected_revision)?;
            (p.id().to_string(), p.plan_search(command_id, near_t)?)
        };
        let job = self.new_job(&project_id, JobKind::SearchMore, Some(command_id.into()));
        let state = self.clone();
        let job_id = job.job_id.clone();
        let handle = tokio::spawn(async move {
            let _permit = state
                .workers
                .clone()
                .acquire_owned()
                .await
                .expect("semaphore open");
            state.update_job(&job_id, |j| j.state = JobState::Running);
            let (s, pl, providers) = (session.clone(), plan.clone(), state.providers.clone());
            let it = tokio::task::spawn_blocking(move || {
                pl.run(&Interpreter::new(&s.bundle, &s.index, &providers))
            })
            .await;
            let outcome = match it {
                Err(e) => Err(e.to_string()),
                Ok(it) => {
                    let diags = it.diagnostics.clone();
                    let mut p = session.project.lock().await;
                    p.apply_search(&plan, it)
                        .map(|ids| (ids, diags))
                        .map_err(|e| e.to_string())
                }
            };
            state.update_job(&job_id, |j| match outcome {
                Ok((ids, diags)) => {
                    j.state = JobState::Done;
                    j.edit_ids = ids;
                    j.diagnostics = diags;
                }
                Err(e) => {
                    j.state = JobState::Failed;
                    j.diagnostics.push(e);
                }
            });
        });
        self.finish(job, handle).await
    }

    async fn finish(
        &self,
        job: JobStatus,
        handle: tokio::task::JoinHandle<()>,
    ) -> Result<JobStatus, ApiError> {
        if self.providers.mode() == ProviderMode::Live {
            return Ok(job);
        }
        handle
            .await
            .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))?;
        self.job(&job.job_id)
    }
}
