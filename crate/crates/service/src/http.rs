//! JSON HTTP API over the session store.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use patternforge::graph::GraphEdit;
use patternforge::requirements::ExtractError;
use patternforge::NfrMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::session::AdvanceInput;
use crate::{Engine, ServiceError, SessionStore};

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<Engine>,
    pub store: SessionStore,
}

pub struct ApiError {
    status: StatusCode,
    kind: String,
    message: String,
    detail: Option<serde_json::Value>,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, kind: "bad_request".into(), message: message.into(), detail: None }
    }

    fn not_found(message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::NOT_FOUND, kind: "not_found".into(), message: message.into(), detail: None }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::SessionNotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::InvalidTransition { .. } => StatusCode::CONFLICT,
            ServiceError::InvalidInput(_)
            | ServiceError::UnknownSubproblem(_)
            | ServiceError::InvalidGraph { .. }
            | ServiceError::Graph(_)
            | ServiceError::Extract(ExtractError::EmptyDescription) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Extract(ExtractError::ExtractionFailed(_)) => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let detail = match &e {
            ServiceError::InvalidGraph { report, .. } => serde_json::to_value(report).ok(),
            _ => None,
        };
        ApiError { status, kind: e.kind().to_owned(), message: e.to_string(), detail }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<&'a serde_json::Value>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { error: &self.kind, message: &self.message, detail: self.detail.as_ref() };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn parse_or_default<T: DeserializeOwned + Default>(body: &Bytes) -> ApiResult<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        Ok(T::default())
    } else {
        parse(body)
    }
}

/// Session work touches the disk and may block on the session lock.
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            kind: "internal".into(),
            message: e.to_string(),
            detail: None,
        }),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub nfrs: NfrMap,
}

#[derive(Debug, Deserialize)]
pub struct SubproblemQuery {
    #[serde(default)]
    subproblem: usize,
}

#[derive(Serialize)]
struct PatternSummary<'a> {
    id: &'a str,
    name: &'a str,
}

#[derive(Serialize)]
struct LanguageSummary<'a> {
    id: &'a str,
    patterns: Vec<PatternSummary<'a>>,
}

pub fn router(engine: Arc<Engine>, store: SessionStore) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/advance", post(advance))
        .route("/sessions/{id}/graph", get(get_graph))
        .route("/sessions/{id}/graph/edits", post(post_edits))
        .route("/sessions/{id}/graph/confirm", post(confirm_graph))
        .route("/sessions/{id}/solution-graph", get(get_solution_graph))
        .route("/sessions/{id}/bundle", get(get_bundle))
        .route("/languages", get(list_languages))
        .route("/languages/{id}/patterns/{pid}", get(get_pattern))
        .with_state(AppState { engine, store })
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: CreateSession = parse_or_default(&body)?;
    let session = blocking(move || app.store.create(req.text, req.threshold, req.nfrs)).await?;
    Ok((StatusCode::CREATED, Json(session)))
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(move || app.store.load(&id)).await?))
}

async fn advance(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let input: AdvanceInput = parse_or_default(&body)?;
    Ok(Json(blocking(move || app.store.advance(&app.engine, &id, &input)).await?))
}

async fn get_graph(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SubproblemQuery>,
) -> ApiResult<impl IntoResponse> {
    let session = blocking(move || app.store.load(&id)).await?;
    let graph = session.graph(q.subproblem).cloned();
    graph.map(Json).ok_or_else(|| ApiError::not_found(format!("no pattern graph for sub-problem {}", q.subproblem)))
}

async fn post_edits(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SubproblemQuery>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let edits: Vec<GraphEdit> = parse(&body)?;
    let session = blocking(move || app.store.edit_graph(&app.engine, &id, q.subproblem, &edits)).await?;
    Ok(Json(session.graph(q.subproblem).cloned()))
}

async fn confirm_graph(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(move || app.store.advance(&app.engine, &id, &AdvanceInput::confirm())).await?))
}

async fn get_solution_graph(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SubproblemQuery>,
) -> ApiResult<impl IntoResponse> {
    let session = blocking(move || app.store.load(&id)).await?;
    let sg = session.solution_graphs.get(q.subproblem).cloned();
    sg.map(Json).ok_or_else(|| ApiError::not_found(format!("no solution graph for sub-problem {}", q.subproblem)))
}

async fn get_bundle(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let (archive, bundle_id) = blocking(move || {
        let session = app.store.load(&id)?;
        let archive = app.store.bundle_archive(&session)?;
        Ok((archive, session.bundle.map(|b| b.id).unwrap_or_default()))
    })
    .await?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/x-tar".to_owned()),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{bundle_id}.tar\"")),
        ],
        archive,
    ))
}

async fn list_languages(State(app): State<AppState>) -> impl IntoResponse {
    let lang = &app.engine.language;
    let summary = LanguageSummary {
        id: lang.id(),
        patterns: lang.patterns().iter().map(|p| PatternSummary { id: &p.id, name: &p.name }).collect(),
    };
    Json(serde_json::json!([summary]))
}

async fn get_pattern(
    State(app): State<AppState>,
    Path((lang_id, pid)): Path<(String, String)>,
) -> ApiResult<impl IntoResponse> {
    let lang = &app.engine.language;
    if lang.id() != lang_id {
        return Err(ApiError::not_found(format!("unknown language `{lang_id}`")));
    }
    let pattern = lang.pattern(&pid).ok_or_else(|| ApiError::not_found(format!("unknown pattern `{pid}`")))?;
    Ok(Json(pattern.clone()))
}

/// Serves until ctrl-c.
pub async fn serve(engine: Arc<Engine>, store: SessionStore, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(engine, store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
