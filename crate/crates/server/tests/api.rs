use std::path::PathBuf;
use std::sync::OnceLock;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use sitrep_core::config::PipelineConfig;
use sitrep_core::pipeline::build;
use sitrep_core::report::to_json;
use sitrep_server::{router, AppState, LoadedReport};
use tower::ServiceExt;

fn fixture_json() -> &'static str {
    static JSON: OnceLock<String> = OnceLock::new();
    JSON.get_or_init(|| {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/sitrep.toml");
        let config = PipelineConfig::load(&path).unwrap();
        to_json(&build(&config).unwrap().report).unwrap()
    })
}

fn app() -> Router {
    let loaded = LoadedReport::parse(fixture_json().to_string()).unwrap();
    router(AppState::loaded(loaded), Some("http://localhost:5173")).unwrap()
}

async fn get(app: Router, uri: &str) -> (StatusCode, Option<String>, Vec<u8>) {
    let resp = app.oneshot(Request::get(uri).body(Body::empty()).unwrap()).await.unwrap();
    let ctype = resp.headers().get(header::CONTENT_TYPE).map(|v| v.to_str().unwrap().to_string());
    let status = resp.status();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, ctype, body)
}

async fn get_json(uri: &str) -> Value {
    let (status, ctype, body) = get(app(), uri).await;
    assert_eq!(status, StatusCode::OK, "{uri}");
    assert_eq!(ctype.as_deref(), Some("application/json"));
    serde_json::from_slice(&body).unwrap()
}

#[tokio::test]
async fn healthz_ok() {
    let (status, _, body) = get(app(), "/healthz").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"ok");
}

#[tokio::test]
async fn full_report_is_the_file() {
    let (status, ctype, body) = get(app(), "/report").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ctype.as_deref(), Some("application/json"));
    assert_eq!(body, fixture_json().as_bytes());
}

#[tokio::test]
async fn projections_resolve() {
    let outline = get_json("/timespans").await;
    let spans = outline["timespans"].as_array().unwrap();
    assert_eq!(spans.len(), 2);
    let chapter_id = spans[0]["chapters"][0]["id"].as_str().unwrap().to_string();
    let section_id = spans[0]["chapters"][0]["sections"][0]["id"].as_str().unwrap().to_string();

    let chapter = get_json(&format!("/chapters/{chapter_id}")).await;
    assert_eq!(chapter["id"], chapter_id.as_str());

    let section = get_json(&format!("/sections/{section_id}")).await;
    assert_eq!(section["summaries"].as_object().unwrap().len(), 3);
    let context_id = section["contexts"][0]["id"].as_str().unwrap().to_string();

    let context = get_json(&format!("/contexts/{context_id}")).await;
    assert_eq!(context["context"]["id"], context_id.as_str());
    assert_eq!(context["article"]["id"], context["context"]["article_id"]);
    assert!(context["article"]["bias"].is_string());
}

#[tokio::test]
async fn unknown_ids_are_404() {
    for uri in ["/chapters/nope", "/sections/nope", "/contexts/nope", "/nowhere"] {
        let (status, ctype, _) = get(app(), uri).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(ctype.as_deref(), Some("application/json"));
    }
}

#[tokio::test]
async fn unloaded_is_503_but_healthy() {
    let app = router(AppState::new(), None).unwrap();
    for uri in ["/report", "/timespans", "/chapters/t0-c1", "/sections/x", "/contexts/x"] {
        assert_eq!(get(app.clone(), uri).await.0, StatusCode::SERVICE_UNAVAILABLE, "{uri}");
    }
    assert_eq!(get(app, "/healthz").await.0, StatusCode::OK);
}

#[tokio::test]
async fn identical_requests_identical_responses() {
    let a = get(app(), "/timespans").await;
    let b = get(app(), "/timespans").await;
    assert_eq!(a, b);
}

#[tokio::test]
async fn cors_header_for_configured_origin() {
    let req = Request::get("/healthz").header(header::ORIGIN, "http://localhost:5173").body(Body::empty()).unwrap();
    let resp = app().oneshot(req).await.unwrap();
    assert_eq!(resp.headers().get(header::ACCESS_CONTROL_ALLOW_ORIGIN).unwrap(), "http://localhost:5173");
}

#[tokio::test]
async fn mutations_not_allowed() {
    let req = Request::post("/report").body(Body::empty()).unwrap();
    let resp = app().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::METHOD_NOT_ALLOWED);
}
