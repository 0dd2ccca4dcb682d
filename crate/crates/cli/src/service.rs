//! HTTP session service over the layout environment.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use laserwall_core::env::{encode_action, Transition};
use laserwall_core::partition::InfiltrationMode;
use laserwall_core::{builtin, builtins, EnvConfig, EnvError, LayoutEnv, Transformation, WallId};
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, RwLock};

use crate::wire::{
    ActionsResponse, CreateSession, ErrorBody, NamedAction, ResetRequest, ScenarioEntry, SessionCreated, StepRequest,
    StepResponse,
};

/// Error returned by a handler, rendered as `{error, message}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}"))
    }
}

impl From<EnvError> for ApiError {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::EpisodeFinished => Self::new(StatusCode::CONFLICT, "episode_finished", e.to_string()),
            EnvError::InvalidAction { .. } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_action", e.to_string())
            }
            EnvError::Config(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_config", e.to_string()),
            EnvError::ResetExhausted(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "reset_failed", e.to_string()),
            EnvError::NotReset | EnvError::Plan(_) => {
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
            }
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::new(e.status(), "bad_request", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: self.code.to_string(), message: self.message })).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// One live episode plus everything needed to rebuild it.
#[derive(Debug)]
pub struct Session {
    env: LayoutEnv,
    seed: u64,
    actions: Vec<usize>,
    last: Option<Transition>,
    created_at: u64,
}

/// On-disk form of a session: the episode is rebuilt by replaying `actions`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub id: String,
    pub config: EnvConfig,
    pub seed: u64,
    pub actions: Vec<usize>,
    pub created_at: u64,
}

impl Session {
    fn start(config: EnvConfig, seed: u64) -> Result<Self, EnvError> {
        let mut env = LayoutEnv::new(config)?;
        env.reset(seed)?;
        let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Ok(Self { env, seed, actions: Vec::new(), last: None, created_at })
    }

    fn restore(record: &SessionRecord) -> Result<Self, EnvError> {
        let mut s = Self::start(record.config.clone(), record.seed)?;
        s.created_at = record.created_at;
        for &a in &record.actions {
            s.apply(a)?;
        }
        Ok(s)
    }

    fn apply(&mut self, action: usize) -> Result<(), EnvError> {
        let tr = self.env.step(action)?;
        self.actions.push(action);
        self.last = Some(tr);
        Ok(())
    }

    fn record(&self, id: &str) -> SessionRecord {
        SessionRecord {
            id: id.to_string(),
            config: self.env.config().clone(),
            seed: self.seed,
            actions: self.actions.clone(),
            created_at: self.created_at,
        }
    }

    pub fn response(&self) -> StepResponse {
        StepResponse::capture(&self.env, self.last.as_ref())
    }
}

/// Shared registry of sessions. Each session sits behind its own mutex so
/// requests to one episode run one at a time while others proceed.
#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<Mutex<Session>>>>>,
}

impl AppState {
    async fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions.read().await.get(id).cloned().ok_or_else(|| ApiError::unknown_session(id))
    }

    async fn insert(&self, session: Session) -> String {
        let mut map = self.sessions.write().await;
        let id = loop {
            let candidate = format!("{:016x}", rand::random::<u64>());
            if !map.contains_key(&candidate) {
                break candidate;
            }
        };
        map.insert(id.clone(), Arc::new(Mutex::new(session)));
        id
    }

    pub async fn len(&self) -> usize {
        self.sessions.read().await.len()
    }

    pub async fn is_empty(&self) -> bool {
        self.len().await == 0
    }

    pub async fn snapshot(&self) -> Vec<SessionRecord> {
        let handles: Vec<(String, Arc<Mutex<Session>>)> =
            self.sessions.read().await.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let mut out = Vec::with_capacity(handles.len());
        for (id, s) in handles {
            out.push(s.lock().await.record(&id));
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }

    pub async fn restore(&self, records: &[SessionRecord]) -> Result<(), EnvError> {
        let mut map = self.sessions.write().await;
        for r in records {
            map.insert(r.id.clone(), Arc::new(Mutex::new(Session::restore(r)?)));
        }
        Ok(())
    }

    pub async fn save(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_vec_pretty(&self.snapshot().await)?;
        std::fs::write(path, json)
    }

    pub async fn load(path: &Path) -> anyhow::Result<Self> {
        let state = Self::default();
        let records: Vec<SessionRecord> = serde_json::from_slice(&std::fs::read(path)?)?;
        state.restore(&records).await?;
        Ok(state)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/scenarios", get(list_scenarios))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", axum::routing::delete(delete_session))
        .route("/sessions/{id}/state", get(session_state))
        .route("/sessions/{id}/step", post(step_session))
        .route("/sessions/{id}/reset", post(reset_session))
        .route("/sessions/{id}/actions", get(session_actions))
        .with_state(state)
}

async fn list_scenarios() -> Json<Vec<ScenarioEntry>> {
    Json(
        builtins()
            .into_iter()
            .map(|s| ScenarioEntry { connections_required: s.connections_required(), scenario: s })
            .collect(),
    )
}

fn unprocessable(code: &'static str, message: impl Into<String>) -> ApiError {
    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
}

/// Builds the environment config a creation request describes.
pub fn session_config(req: &CreateSession) -> Result<EnvConfig, ApiError> {
    if let Some(c) = &req.config {
        return Ok(c.clone());
    }
    let scenario = match &req.custom_scenario {
        Some(s) => s.clone(),
        None => builtin(req.scenario.unwrap_or(1)).map_err(|e| unprocessable("invalid_config", e.to_string()))?,
    };
    let mut cfg = EnvConfig::new(scenario);
    if let Some(m) = req.light_mode {
        cfg.light_mode = m;
    }
    if let Some(i) = req.infiltration {
        cfg.infiltration = match i {
            InfiltrationMode::Decreasing { horizon: 0 } => InfiltrationMode::decreasing_for(cfg.scenario.grid),
            other => other,
        };
    }
    if let Some(w) = req.wall_types {
        cfg.wall_types = w;
    }
    if let Some(n) = req.max_steps {
        cfg.max_steps = n;
    }
    Ok(cfg)
}

async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let Json(req) = body?;
    let config = session_config(&req)?;
    let seed = req.seed.unwrap_or(config.seed);
    let session = Session::start(config.clone(), seed)?;
    let snapshot = session.response();
    let id = state.insert(session).await;
    Ok((StatusCode::CREATED, Json(SessionCreated { session_id: id, seed, config, state: snapshot })))
}

async fn session_state(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<StepResponse> {
    let s = state.get(&id).await?;
    let guard = s.lock().await;
    Ok(Json(guard.response()))
}

/// Resolves a wire step request to an action index for `env`.
pub fn resolve_action(env: &LayoutEnv, req: &StepRequest) -> Result<usize, ApiError> {
    let t = Transformation::from_name(&req.transformation).ok_or_else(|| {
        unprocessable("unknown_transformation", format!("unknown transformation {:?}", req.transformation))
    })?;
    if req.wall_id as usize >= env.n_walls() {
        return Err(unprocessable("unknown_wall", format!("wall {} out of range 0..{}", req.wall_id, env.n_walls())));
    }
    Ok(encode_action(WallId(req.wall_id), t))
}

async fn step_session(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<StepRequest>, JsonRejection>,
) -> ApiResult<StepResponse> {
    let s = state.get(&id).await?;
    let Json(req) = body?;
    let mut guard = s.lock().await;
    if guard.env.is_finished() {
        return Err(EnvError::EpisodeFinished.into());
    }
    let action = resolve_action(&guard.env, &req)?;
    guard.apply(action)?;
    Ok(Json(guard.response()))
}

async fn reset_session(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Option<Json<ResetRequest>>,
) -> ApiResult<StepResponse> {
    let s = state.get(&id).await?;
    let req = body.map(|Json(r)| r).unwrap_or_default();
    let mut guard = s.lock().await;
    let seed = req.seed.unwrap_or(guard.seed);
    guard.env.reset(seed)?;
    guard.seed = seed;
    guard.actions.clear();
    guard.last = None;
    Ok(Json(guard.response()))
}

async fn session_actions(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<ActionsResponse> {
    let s = state.get(&id).await?;
    let guard = s.lock().await;
    let actions = if guard.env.is_finished() {
        Vec::new()
    } else {
        guard.env.action_mask().iter().enumerate().filter(|(_, &ok)| ok).map(|(a, _)| NamedAction::of(a)).collect()
    };
    Ok(Json(ActionsResponse { actions }))
}

async fn delete_session(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<StatusCode, ApiError> {
    match state.sessions.write().await.remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::unknown_session(&id)),
    }
}
