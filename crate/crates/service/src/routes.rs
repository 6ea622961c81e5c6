use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use featacq::acquisition::AcquisitionSession;

use crate::api::{
    parse_create_session, parse_submit_feature, ApiError, CreatedSession, ModelInfo, SessionSnapshot, SubmitResponse,
};
use crate::registry::ModelRegistry;
use crate::store::{lock_entry, next_suggestion, SessionEntry, SessionStore};

#[derive(Clone)]
pub struct AppState {
    pub models: Arc<ModelRegistry>,
    pub sessions: Arc<SessionStore>,
}

impl AppState {
    pub fn new(models: ModelRegistry, sessions: SessionStore) -> Self {
        Self {
            models: Arc::new(models),
            sessions: Arc::new(sessions),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/models", get(list_models))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/features", post(submit_feature))
        .route("/v1/sessions/{id}/trajectory", get(get_trajectory))
        .with_state(state)
}

/// Attribution is CPU-bound; keep it off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn list_models(State(state): State<AppState>) -> Json<Vec<ModelInfo>> {
    Json(state.models.list())
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<CreatedSession>), ApiError> {
    let req = parse_create_session(&body)?;
    let entry = state
        .models
        .get(&req.model_tag)
        .ok_or_else(|| ApiError::not_found(format!("no model tagged {:?}", req.model_tag)))?
        .clone();
    let created = blocking(move || {
        let session = AcquisitionSession::new(entry.model, entry.schema, req.policy, req.budget)?;
        let started = SessionEntry::start(req.model_tag, session)?;
        let snapshot = started.snapshot();
        state.sessions.insert(started);
        Ok(CreatedSession {
            snapshot,
            schema: entry.summary,
        })
    })
    .await?;
    log::info!("session {} created", created.snapshot.session_id);
    Ok((StatusCode::CREATED, Json(created)))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionSnapshot>, ApiError> {
    let shared = state.sessions.get(&id)?;
    let snapshot = blocking(move || Ok(lock_entry(&shared).snapshot())).await?;
    Ok(Json(snapshot))
}

async fn submit_feature(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SubmitResponse>, ApiError> {
    let req = parse_submit_feature(&body)?;
    let shared = state.sessions.get(&id)?;
    let response = blocking(move || {
        let mut guard = lock_entry(&shared);
        let entry = &mut *guard;
        let step = entry.session.history().len();
        if req.expected_step.is_some_and(|s| s != step) {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "conflict",
                format!("session is at step {step}, request expected {}", req.expected_step.unwrap_or(0)),
            ));
        }
        let recorded = entry.session.acquire(req.feature_index, req.value)?.clone();
        entry.suggestion = next_suggestion(&mut entry.session)?;
        let s = &entry.session;
        Ok(SubmitResponse {
            entry: recorded,
            posterior: s.posterior().to_vec(),
            predicted_class: s.predicted_class(),
            accumulated_cost: s.accumulated_cost(),
            remaining_budget: s.remaining_budget(),
            status: s.status(),
            next_suggestion: entry.suggestion.clone(),
            stop_reason: s.status().stop_reason().map(str::to_string),
        })
    })
    .await?;
    Ok(Json(response))
}

/// Step-0-first trajectory records, for archiving a finished session.
async fn get_trajectory(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Vec<featacq::acquisition::TrajectoryRecord>>, ApiError> {
    let shared = state.sessions.get(&id)?;
    let records = blocking(move || {
        let e = lock_entry(&shared);
        let schema = e.session.schema().clone();
        Ok(e.session.trajectory(None).records(&schema).collect())
    })
    .await?;
    Ok(Json(records))
}
