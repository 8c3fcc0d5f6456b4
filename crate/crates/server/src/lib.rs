//! Read-only HTTP API over a situation report file.
//!
//! | route               | body                                        |
//! |---------------------|---------------------------------------------|
//! | `GET /healthz`      | `ok` (always 200)                           |
//! | `GET /report`       | the full report JSON                        |
//! | `GET /timespans`    | timespans with chapter and section outlines |
//! | `GET /chapters/:id` | one chapter with its sections               |
//! | `GET /sections/:id` | one section with contexts and summaries     |
//! | `GET /contexts/:id` | `{context, article}`                        |
//!
//! Data routes answer 503 until a report is loaded and 404 for unknown ids.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use serde_json::{json, Value};
use sitrep_core::report::{from_json, ReportError, SituationReport};
use sitrep_core::summarize::DetailLevel;
use tower_http::cors::{AllowOrigin, CorsLayer};

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("cannot read report {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid report {path}: {source}")]
    Report { path: PathBuf, source: ReportError },
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server error: {0}")]
    Serve(std::io::Error),
    #[error("invalid CORS origin {0:?}")]
    Cors(String),
}

/// A parsed report plus the exact bytes it was read from.
#[derive(Debug)]
pub struct LoadedReport {
    pub report: SituationReport,
    pub raw: String,
}

impl LoadedReport {
    /// Parse and validate report JSON. Required detail levels are taken
    /// from the report's own provenance, falling back to all three.
    pub fn parse(raw: String) -> Result<Self, ReportError> {
        let report = from_json(&raw)?;
        let levels: Vec<DetailLevel> = report
            .provenance
            .config
            .get("detail_levels")
            .and_then(|v| serde_json::from_value(v.clone()).ok())
            .unwrap_or_else(|| DetailLevel::ALL.to_vec());
        report.validate(&levels)?;
        Ok(LoadedReport { report, raw })
    }

    pub fn load(path: &Path) -> Result<Self, ServerError> {
        let raw =
            std::fs::read_to_string(path).map_err(|source| ServerError::Io { path: path.to_path_buf(), source })?;
        Self::parse(raw).map_err(|source| ServerError::Report { path: path.to_path_buf(), source })
    }
}

/// Shared, write-once slot for the served report.
#[derive(Debug, Clone, Default)]
pub struct AppState {
    slot: Arc<OnceLock<LoadedReport>>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn loaded(report: LoadedReport) -> Self {
        let state = Self::default();
        state.set(report);
        state
    }

    /// Install the report; later calls are ignored.
    pub fn set(&self, report: LoadedReport) {
        let _ = self.slot.set(report);
    }

    pub fn get(&self) -> Option<&LoadedReport> {
        self.slot.get()
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn json_value(status: StatusCode, value: &impl serde::Serialize) -> Response {
    match serde_json::to_string(value) {
        Ok(body) => json_response(status, body),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string()),
    }
}

fn error(status: StatusCode, message: &str) -> Response {
    json_response(status, json!({ "error": message }).to_string())
}

fn not_loaded() -> Response {
    error(StatusCode::SERVICE_UNAVAILABLE, "report not loaded")
}

fn not_found(kind: &str, id: &str) -> Response {
    error(StatusCode::NOT_FOUND, &format!("unknown {kind} {id:?}"))
}

async fn healthz() -> &'static str {
    "ok"
}

async fn full_report(State(state): State<AppState>) -> Response {
    match state.get() {
        Some(loaded) => json_response(StatusCode::OK, loaded.raw.clone()),
        None => not_loaded(),
    }
}

fn timespan_outline(report: &SituationReport) -> Value {
    let spans: Vec<Value> = report
        .timespans
        .iter()
        .map(|t| {
            let chapters: Vec<Value> = t
                .chapters
                .iter()
                .map(|c| {
                    let sections: Vec<Value> = c
                        .sections
                        .iter()
                        .map(|s| json!({ "id": s.id, "question": s.question.text }))
                        .collect();
                    json!({ "id": c.id, "headline": c.headline, "cluster_size": c.cluster_size, "sections": sections })
                })
                .collect();
            let mut v = serde_json::to_value(&t.timespan).unwrap_or_else(|_| json!({}));
            v["chapters"] = Value::Array(chapters);
            v
        })
        .collect();
    json!({ "scenario_name": report.scenario_name, "timespans": spans })
}

async fn timespans(State(state): State<AppState>) -> Response {
    match state.get() {
        Some(loaded) => json_value(StatusCode::OK, &timespan_outline(&loaded.report)),
        None => not_loaded(),
    }
}

async fn chapter(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    let Some(loaded) = state.get() else { return not_loaded() };
    match loaded.report.chapter(&id) {
        Some(c) => json_value(StatusCode::OK, c),
        None => not_found("chapter", &id),
    }
}

async fn section(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    let Some(loaded) = state.get() else { return not_loaded() };
    match loaded.report.section(&id) {
        Some(s) => json_value(StatusCode::OK, s),
        None => not_found("section", &id),
    }
}

async fn context(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    let Some(loaded) = state.get() else { return not_loaded() };
    let report = &loaded.report;
    match report.context(&id) {
        Some(c) => json_value(StatusCode::OK, &json!({ "context": c, "article": report.articles.get(&c.article_id) })),
        None => not_found("context", &id),
    }
}

async fn fallback() -> Response {
    error(StatusCode::NOT_FOUND, "no such route")
}

/// Build the router. With `cors_origin` set, that origin may issue GETs.
pub fn router(state: AppState, cors_origin: Option<&str>) -> Result<Router, ServerError> {
    let mut app = Router::new()
        .route("/healthz", get(healthz))
        .route("/report", get(full_report))
        .route("/timespans", get(timespans))
        .route("/chapters/{id}", get(chapter))
        .route("/sections/{id}", get(section))
        .route("/contexts/{id}", get(context))
        .fallback(fallback)
        .with_state(state);
    if let Some(origin) = cors_origin {
        let value = HeaderValue::from_str(origin).map_err(|_| ServerError::Cors(origin.to_string()))?;
        app = app.layer(
            CorsLayer::new().allow_origin(AllowOrigin::exact(value)).allow_methods([Method::GET, Method::OPTIONS]),
        );
    }
    Ok(app)
}

/// Bind, start answering (503 on data routes), then load the report.
/// Runs until `shutdown` resolves.
pub async fn serve(
    report_path: &Path,
    addr: SocketAddr,
    cors_origin: Option<&str>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServerError> {
    let state = AppState::new();
    let app = router(state.clone(), cors_origin)?;
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| ServerError::Bind { addr, source })?;
    let local = listener.local_addr().map_err(ServerError::Serve)?;
    tracing::info!(%local, "listening");
    let server = tokio::spawn(async move { axum::serve(listener, app).with_graceful_shutdown(shutdown).await });

    let path = report_path.to_path_buf();
    let loaded = tokio::task::spawn_blocking(move || LoadedReport::load(&path))
        .await
        .map_err(|e| ServerError::Serve(std::io::Error::other(e)))?;
    match loaded {
        Ok(report) => {
            tracing::info!(path = %report_path.display(), "report loaded");
            state.set(report);
        }
        Err(e) => {
            server.abort();
            return Err(e);
        }
    }
    server.await.map_err(|e| ServerError::Serve(std::io::Error::other(e)))?.map_err(ServerError::Serve)
}
