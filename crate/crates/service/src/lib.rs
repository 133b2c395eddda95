//! HTTP/JSON front end for interactive teaching sessions.
//!
//! Scenes and sessions live in process memory. Planning runs as background
//! jobs on a bounded worker pool; clients poll `GET /api/jobs/{id}`.

mod error;
mod jobs;

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path, State};
use axum::http::{HeaderValue, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use prefplan::io::{self, preprocess_demo, DemonstrationDocument, PlanDocument, ScenarioDocument, SessionDocument};
use prefplan::planner::plan_with_progress;
use prefplan::{FeedbackMode, Session, WeightState};

pub use error::ApiError;
pub use jobs::{JobState, PlanJob};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Plan jobs allowed to run at once.
    pub workers: usize,
    /// Origin allowed by CORS; any origin when unset.
    pub allowed_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { workers: 2, allowed_origin: None }
    }
}

struct SessionEntry {
    scenario_id: u64,
    session: Session,
    active_job: Option<u64>,
}

struct Store {
    next_id: AtomicU64,
    scenarios: RwLock<BTreeMap<u64, ScenarioDocument>>,
    sessions: RwLock<HashMap<u64, Arc<tokio::sync::Mutex<SessionEntry>>>>,
    jobs: RwLock<HashMap<u64, Arc<Mutex<PlanJob>>>>,
    workers: Semaphore,
}

#[derive(Clone)]
pub struct AppState {
    store: Arc<Store>,
}

impl AppState {
    pub fn new(config: &ServiceConfig) -> Self {
        Self {
            store: Arc::new(Store {
                next_id: AtomicU64::new(1),
                scenarios: RwLock::default(),
                sessions: RwLock::default(),
                jobs: RwLock::default(),
                workers: Semaphore::new(config.workers.max(1)),
            }),
        }
    }

    fn next_id(&self) -> u64 {
        self.store.next_id.fetch_add(1, Ordering::Relaxed)
    }

    /// Registers a scene directly, bypassing HTTP.
    pub fn add_scenario(&self, doc: ScenarioDocument) -> u64 {
        let id = self.next_id();
        self.store.scenarios.write().expect("scenario lock").insert(id, doc);
        id
    }

    fn session(&self, id: u64) -> Result<Arc<tokio::sync::Mutex<SessionEntry>>, ApiError> {
        self.store
            .sessions
            .read()
            .expect("session lock")
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("session {id}")))
    }

    fn job(&self, id: u64) -> Option<Arc<Mutex<PlanJob>>> {
        self.store.jobs.read().expect("job lock").get(&id).cloned()
    }

    fn job_active(&self, id: Option<u64>) -> bool {
        id.and_then(|j| self.job(j)).is_some_and(|j| !j.lock().expect("job lock").finished())
    }
}

pub fn router(state: AppState, config: &ServiceConfig) -> Router {
    let origin = match config.allowed_origin.as_deref().map(HeaderValue::from_str) {
        Some(Ok(v)) => AllowOrigin::exact(v),
        _ => AllowOrigin::any(),
    };
    let cors = CorsLayer::new().allow_origin(origin).allow_methods(Any).allow_headers(Any);
    Router::new()
        .route("/api/scenarios", post(create_scenario).get(list_scenarios))
        .route("/api/scenarios/{id}", get(get_scenario))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/demonstrations", post(submit_demonstration))
        .route("/api/sessions/{id}/plan", post(start_plan))
        .route("/api/jobs/{id}", get(get_job))
        .layer(cors)
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let app = router(AppState::new(&config), &config);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}

fn parse_id(raw: &str, what: &str) -> Result<u64, ApiError> {
    raw.parse().map_err(|_| ApiError::NotFound(format!("{what} {raw}")))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub id: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

async fn create_scenario(State(state): State<AppState>, body: String) -> Result<(StatusCode, Json<Created>), ApiError> {
    let doc: ScenarioDocument = io::from_str(&body)?;
    Ok((StatusCode::CREATED, Json(Created { id: state.add_scenario(doc) })))
}

async fn list_scenarios(State(state): State<AppState>) -> Json<Vec<ScenarioEntry>> {
    let scenarios = state.store.scenarios.read().expect("scenario lock");
    Json(scenarios.iter().map(|(id, doc)| ScenarioEntry { id: *id, name: doc.name.clone() }).collect())
}

async fn get_scenario(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<ScenarioDocument>, ApiError> {
    let id = parse_id(&id, "scenario")?;
    let scenarios = state.store.scenarios.read().expect("scenario lock");
    scenarios.get(&id).cloned().map(Json).ok_or_else(|| ApiError::NotFound(format!("scenario {id}")))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewSession {
    pub scenario_id: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    0.1
}

async fn create_session(State(state): State<AppState>, body: String) -> Result<(StatusCode, Json<Created>), ApiError> {
    let req: NewSession = serde_json::from_str(&body).map_err(|e| ApiError::BadRequest(vec![e.to_string()]))?;
    let scenario = state
        .store
        .scenarios
        .read()
        .expect("scenario lock")
        .get(&req.scenario_id)
        .cloned()
        .ok_or_else(|| ApiError::NotFound(format!("scenario {}", req.scenario_id)))?;
    let session = Session::new(scenario.context(), scenario.config(), req.alpha)?;
    let id = state.next_id();
    let entry = SessionEntry { scenario_id: req.scenario_id, session, active_job: None };
    state.store.sessions.write().expect("session lock").insert(id, Arc::new(tokio::sync::Mutex::new(entry)));
    Ok((StatusCode::CREATED, Json(Created { id })))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionView {
    pub id: u64,
    pub scenario_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_job: Option<u64>,
    pub weights: WeightState,
    /// The full session: weight history, iterations and the latest plan.
    pub session: SessionDocument,
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let id = parse_id(&id, "session")?;
    let entry = state.session(id)?;
    let entry = entry.lock().await;
    let active_job = entry.active_job.filter(|j| state.job_active(Some(*j)));
    Ok(Json(SessionView {
        id,
        scenario_id: entry.scenario_id,
        active_job,
        weights: entry.session.weights().clone(),
        session: SessionDocument::new(entry.session.clone()),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StepView {
    pub iteration: usize,
    pub mode: FeedbackMode,
    pub weights: WeightState,
}

async fn submit_demonstration(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: String,
) -> Result<Json<StepView>, ApiError> {
    let id = parse_id(&id, "session")?;
    let doc: DemonstrationDocument = io::from_str(&body)?;
    let entry = state.session(id)?;
    let mut entry = entry.lock().await;
    if state.job_active(entry.active_job) {
        return Err(ApiError::Conflict(format!("session {id} is planning; wait for the job to finish")));
    }
    let demo = preprocess_demo(&doc, &entry.session.config)?;
    let mode = doc.mode.unwrap_or(FeedbackMode::Both);
    let record = entry.session.step(&demo, mode)?;
    Ok(Json(StepView { iteration: record.iteration, mode, weights: record.weights.clone() }))
}

async fn start_plan(State(state): State<AppState>, Path(id): Path<String>) -> Result<(StatusCode, Json<Created>), ApiError> {
    let session_id = parse_id(&id, "session")?;
    let entry = state.session(session_id)?;
    let mut guard = entry.lock().await;
    if let Some(active) = guard.active_job.filter(|j| state.job_active(Some(*j))) {
        return Err(ApiError::Conflict(format!("session {session_id} already has active job {active}")));
    }
    let job_id = state.next_id();
    let job = Arc::new(Mutex::new(PlanJob::new(job_id, session_id)));
    state.store.jobs.write().expect("job lock").insert(job_id, job.clone());
    guard.active_job = Some(job_id);
    let (weights, context, config) = (guard.session.weights().clone(), guard.session.context.clone(), guard.session.config.clone());
    drop(guard);

    let state_bg = state.clone();
    tokio::spawn(async move {
        let _permit = state_bg.store.workers.acquire().await.expect("worker pool closed");
        job.lock().expect("job lock").start();
        let progress_job = job.clone();
        let outcome = tokio::task::spawn_blocking(move || {
            plan_with_progress(&weights, &context, &config, &|f| progress_job.lock().expect("job lock").report(f))
                .map(|plan| PlanDocument::new(weights, plan))
        })
        .await;
        let outcome = match outcome {
            Ok(Ok(doc)) => {
                let mut guard = entry.lock().await;
                guard.session.set_plan(doc.plan.clone());
                Ok(doc)
            }
            Ok(Err(e)) => Err(e.to_string()),
            Err(e) => Err(format!("planner task failed: {e}")),
        };
        if let Err(e) = &outcome {
            tracing::warn!("plan job {job_id} failed: {e}");
        }
        job.lock().expect("job lock").finish(outcome);
    });
    Ok((StatusCode::ACCEPTED, Json(Created { id: job_id })))
}

async fn get_job(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<PlanJob>, ApiError> {
    let id = parse_id(&id, "job")?;
    let job = state.job(id).ok_or_else(|| ApiError::NotFound(format!("job {id}")))?;
    let snapshot = job.lock().expect("job lock").clone();
    Ok(Json(snapshot))
}
