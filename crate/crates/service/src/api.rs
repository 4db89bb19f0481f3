//! HTTP routes over the session engine.
//!
//! The service is a thin adapter: every request maps to one engine call on
//! one session, and the record a client finishes with is the one the engine
//! would produce from the same inputs, timestamps and seed.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use hintbandit::arms::ArmId;
use hintbandit::session::{EndReason, FeatureEvent, SessionError};
use hintbandit::{Condition, Engine, Session, SessionConfig, SessionRecord};
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, RwLock};
use tower_http::services::ServeDir;
use uuid::Uuid;

use crate::config::{ServiceConfig, SessionDefaults};
use crate::corpus::CorpusWriter;

/// Page served at `/` when no static directory is configured.
pub const BUILTIN_INDEX: &str = include_str!("../static/index.html");

/// Source of request timestamps in UTC milliseconds.
pub type NowFn = Arc<dyn Fn() -> u64 + Send + Sync>;

enum Entry {
    Open(Box<Session>),
    /// Finished; `persisted` is false when the corpus write failed, in which
    /// case a repeated finish retries the write instead of failing with 409.
    Finished { record: Box<SessionRecord>, persisted: bool },
}

/// Shared state behind every route.
pub struct AppState {
    engine: Arc<OnceLock<Engine>>,
    sessions: RwLock<HashMap<Uuid, Arc<Mutex<Entry>>>>,
    corpus: CorpusWriter,
    defaults: SessionDefaults,
    now: NowFn,
}

impl AppState {
    pub fn new(corpus: CorpusWriter, defaults: SessionDefaults, now: NowFn) -> Self {
        Self {
            engine: Arc::new(OnceLock::new()),
            sessions: RwLock::new(HashMap::new()),
            corpus,
            defaults,
            now,
        }
    }

    /// State for `config` with the wall clock; the engine is not loaded yet.
    pub fn from_config(config: &ServiceConfig) -> Self {
        Self::new(
            CorpusWriter::new(config.corpus_file()),
            config.sessions.clone(),
            Arc::new(hintbandit::session::unix_millis),
        )
    }

    /// Installs the engine; requests get 503 until this happens. Returns
    /// false if an engine was already installed.
    pub fn set_engine(&self, engine: Engine) -> bool {
        self.engine.set(engine).is_ok()
    }

    pub fn is_ready(&self) -> bool {
        self.engine.get().is_some()
    }

    pub fn corpus_path(&self) -> &std::path::Path {
        self.corpus.path()
    }

    /// Finishes, with reason `expired`, every open session whose deadline
    /// passed more than `grace_ms` ago, and persists the records. Covers
    /// clients that disappear without calling finish. Returns how many
    /// sessions were closed.
    pub async fn reap_expired(&self, grace_ms: u64) -> usize {
        let now = (self.now)();
        let entries: Vec<_> = self.sessions.read().await.values().cloned().collect();
        let mut closed = 0;
        for entry in entries {
            let mut guard = entry.lock().await;
            let Entry::Open(session) = &mut *guard else { continue };
            if now <= session.deadline_ms().saturating_add(grace_ms) {
                continue;
            }
            let at = now.max(last_event_ms(session));
            match session.finalize_with(at, EndReason::Expired) {
                Ok(record) => {
                    let persisted = self.persist(&record);
                    *guard = Entry::Finished { record: Box::new(record), persisted };
                    closed += 1;
                }
                Err(e) => tracing::error!(error = %e, "failed to close expired session"),
            }
        }
        closed
    }

    fn engine(&self) -> Result<&Engine, ApiError> {
        self.engine.get().ok_or(ApiError::NotReady)
    }

    async fn entry(&self, id: &str) -> Result<Arc<Mutex<Entry>>, ApiError> {
        let id = Uuid::parse_str(id).map_err(|_| ApiError::NotFound)?;
        self.sessions.read().await.get(&id).cloned().ok_or(ApiError::NotFound)
    }

    fn persist(&self, record: &SessionRecord) -> bool {
        match self.corpus.append(record) {
            Ok(()) => true,
            Err(e) => {
                tracing::error!(path = %self.corpus.path().display(), error = %e, "failed to persist record");
                false
            }
        }
    }

    /// Current time for `session`, never earlier than its last event.
    fn now_for(&self, session: &Session) -> u64 {
        (self.now)().max(last_event_ms(session))
    }
}

fn last_event_ms(session: &Session) -> u64 {
    session
        .events()
        .last()
        .map_or(session.started_at_ms(), |e| e.at_ms())
}

/// Error body: `{"error": "<kind>", "message": "..."}`.
#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("unknown session")]
    NotFound,
    #[error("{0}")]
    Conflict(String),
    #[error("word store is still loading")]
    NotReady,
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    fn status(&self) -> (StatusCode, &'static str) {
        match self {
            ApiError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            ApiError::NotFound => (StatusCode::NOT_FOUND, "not_found"),
            ApiError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            ApiError::NotReady => (StatusCode::SERVICE_UNAVAILABLE, "not_ready"),
            ApiError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::InvalidConfig(_) | SessionError::EmptyPhrase => ApiError::BadRequest(e.to_string()),
            SessionError::Closed
            | SessionError::Expired
            | SessionError::Unhinted
            | SessionError::AllArmsUnavailable => ApiError::Conflict(e.to_string()),
            SessionError::ClockWentBackwards { .. } | SessionError::Bandit(_) | SessionError::Replay(_) => {
                ApiError::Internal(e.to_string())
            }
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind) = self.status();
        let body = serde_json::json!({ "error": kind, "message": self.to_string() });
        (status, Json(body)).into_response()
    }
}

/// `Json` whose rejections become 400 with the error body above.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let Json(value) = Json::<T>::from_request(req, state).await?;
        Ok(ApiJson(value))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub participant_id: String,
    pub concept: String,
    pub condition: Condition,
    /// Generated by the server when absent; always recorded.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub block: Option<u8>,
    #[serde(default)]
    pub practice: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: Uuid,
    pub config: SessionConfig,
    pub started_at_ms: u64,
    /// Last instant inputs are accepted.
    pub deadline_ms: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitFeature {
    pub phrase: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HintResponse {
    pub words: Vec<String>,
    pub arm: ArmId,
    pub t: u64,
}

/// Settings the browser UI fetches at startup.
#[derive(Debug, Clone, Serialize)]
struct UiConfig {
    service_base_url: &'static str,
    duration_secs: u64,
    hint_size: usize,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    ApiJson(body): ApiJson<CreateSession>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let engine = state.engine()?;
    if body.participant_id.trim().is_empty() {
        return Err(ApiError::BadRequest("participant_id must not be empty".into()));
    }
    let seed = body.seed.unwrap_or_else(rand::random);
    let mut config = SessionConfig::new(&body.participant_id, &body.concept, body.condition, seed);
    config.duration_secs = state.defaults.duration_secs;
    config.horizon = state.defaults.horizon;
    config.hint_size = state.defaults.hint_size;
    config.block = body.block;
    config.practice = body.practice;

    let session = engine.start(config, (state.now)())?;
    let created = SessionCreated {
        session_id: Uuid::new_v4(),
        config: session.config().clone(),
        started_at_ms: session.started_at_ms(),
        deadline_ms: session.deadline_ms(),
    };
    tracing::info!(
        session = %created.session_id,
        concept = %created.config.concept,
        condition = %created.config.condition,
        "session created"
    );
    state
        .sessions
        .write()
        .await
        .insert(created.session_id, Arc::new(Mutex::new(Entry::Open(Box::new(session)))));
    Ok((StatusCode::CREATED, Json(created)))
}

async fn submit_feature(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    ApiJson(body): ApiJson<SubmitFeature>,
) -> Result<Json<FeatureEvent>, ApiError> {
    let entry = state.entry(&id).await?;
    let mut guard = entry.lock().await;
    let Entry::Open(session) = &mut *guard else {
        return Err(SessionError::Closed.into());
    };
    let now = state.now_for(session);
    Ok(Json(session.submit_feature(&body.phrase, now)?))
}

async fn request_hint(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<HintResponse>, ApiError> {
    let entry = state.entry(&id).await?;
    let mut guard = entry.lock().await;
    let Entry::Open(session) = &mut *guard else {
        return Err(SessionError::Closed.into());
    };
    let now = state.now_for(session);
    let hint = session.request_hint(now)?;
    Ok(Json(HintResponse {
        words: hint.words,
        arm: hint.arm,
        t: hint.t,
    }))
}

async fn finish_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionRecord>, ApiError> {
    let entry = state.entry(&id).await?;
    let mut guard = entry.lock().await;
    match &mut *guard {
        Entry::Open(session) => {
            let now = state.now_for(session);
            let reason = if session.is_expired(now) {
                EndReason::Expired
            } else {
                EndReason::Finished
            };
            let record = session.finalize_with(now, reason)?;
            let persisted = state.persist(&record);
            *guard = Entry::Finished {
                record: Box::new(record.clone()),
                persisted,
            };
            if !persisted {
                return Err(ApiError::Internal("record could not be persisted; retry finish".into()));
            }
            tracing::info!(session = %id, ?reason, "session finished");
            Ok(Json(record))
        }
        Entry::Finished { record, persisted } => {
            if *persisted {
                return Err(ApiError::Conflict("session already finished".into()));
            }
            if !state.persist(record) {
                return Err(ApiError::Internal("record could not be persisted; retry finish".into()));
            }
            *persisted = true;
            Ok(Json((**record).clone()))
        }
    }
}

async fn healthz(State(state): State<Arc<AppState>>) -> Result<Json<serde_json::Value>, ApiError> {
    state.engine()?;
    Ok(Json(serde_json::json!({ "status": "ok" })))
}

async fn ui_config(State(state): State<Arc<AppState>>) -> Json<UiConfig> {
    Json(UiConfig {
        service_base_url: "",
        duration_secs: state.defaults.duration_secs,
        hint_size: state.defaults.hint_size,
    })
}

async fn builtin_index() -> impl IntoResponse {
    ([(header::CACHE_CONTROL, "no-cache")], Html(BUILTIN_INDEX))
}

/// All routes. Static assets come from `static_dir` when given, else the
/// builtin single page is served at `/`.
pub fn router(state: Arc<AppState>, static_dir: Option<&std::path::Path>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/features", post(submit_feature))
        .route("/sessions/{id}/hints", post(request_hint))
        .route("/sessions/{id}/finish", post(finish_session))
        .route("/healthz", get(healthz))
        .route("/config.json", get(ui_config))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(builtin_index)),
    }
}
