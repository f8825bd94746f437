#![allow(dead_code)]

use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use signdict::catalog::VocabularyCatalog;
use signdict::pose::synth::{synthesize_dataset, synthetic_catalog, SynthConfig};
use signdict::recognizer::{train, AugmentationConfig, LandmarkSubset, ModelConfig, TrainConfig, TrainedModel};
use signdict::service::{default_latency_model, router, AppState, Store};

/// A quickly trained (and inaccurate) 10-class model for plumbing tests.
pub fn tiny_model() -> (TrainedModel, VocabularyCatalog) {
    let catalog = synthetic_catalog(10);
    let data = synthesize_dataset(&SynthConfig { per_class: 2, frames: 12, ..Default::default() }).unwrap();
    let tc = TrainConfig { epochs: 1, landmark_subset: LandmarkSubset::compact(), ..Default::default() };
    let model = train(&data, &catalog, &tc, &ModelConfig::compact(), &AugmentationConfig::disabled()).unwrap();
    (model, catalog)
}

pub fn app_state(model: TrainedModel, catalog: VocabularyCatalog, dir: &std::path::Path, retain: bool) -> AppState {
    AppState::new(model, catalog, Store::open(dir).unwrap(), default_latency_model(), retain).unwrap()
}

pub fn app(dir: &std::path::Path, retain: bool) -> (Arc<AppState>, Router) {
    let (model, catalog) = tiny_model();
    let state = Arc::new(app_state(model, catalog, dir, retain));
    (state.clone(), router(state))
}

pub const BOUNDARY: &str = "XBOUNDARYX";

/// Multipart body with one part per `(name, bytes)`.
pub fn multipart(parts: &[(&str, &[u8])]) -> Vec<u8> {
    let mut body = Vec::new();
    for (name, bytes) in parts {
        body.extend_from_slice(format!("--{BOUNDARY}\r\n").as_bytes());
        body.extend_from_slice(
            format!("Content-Disposition: form-data; name=\"{name}\"; filename=\"{name}.bin\"\r\n\r\n").as_bytes(),
        );
        body.extend_from_slice(bytes);
        body.extend_from_slice(b"\r\n");
    }
    body.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    body
}

pub fn post_submission(body: Vec<u8>) -> Request<Body> {
    Request::post("/api/v1/submissions")
        .header("content-type", format!("multipart/form-data; boundary={BOUNDARY}"))
        .body(Body::from(body))
        .unwrap()
}

pub fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

pub async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, value)
}

pub async fn submit(app: &Router, parts: &[(&str, &[u8])]) -> String {
    let (status, v) = send(app, post_submission(multipart(parts))).await;
    assert_eq!(status, StatusCode::ACCEPTED, "{v}");
    v["id"].as_str().unwrap().to_string()
}

/// Polls status every 5 ms until the state is terminal; returns every
/// observed `(state, progress)` pair.
pub async fn poll_until_terminal(app: &Router, id: &str) -> Vec<(String, f64)> {
    let mut seen = Vec::new();
    for _ in 0..4000 {
        let (status, v) = send(app, get(&format!("/api/v1/submissions/{id}/status"))).await;
        assert_eq!(status, StatusCode::OK, "{v}");
        let state = v["state"].as_str().unwrap().to_string();
        seen.push((state.clone(), v["progress"].as_f64().unwrap()));
        if matches!(state.as_str(), "done" | "rejected" | "failed") {
            return seen;
        }
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
    panic!("submission {id} did not finish: {seen:?}");
}

const LEGAL_PATHS: &[&[&str]] = &[
    &["received", "checking", "rejected"],
    &["received", "checking", "predicting", "done"],
    &["received", "checking", "predicting", "failed"],
    &["received", "checking", "failed"],
    &["received", "failed"],
];

/// Whether the observed states, with repeats collapsed, are a subsequence of
/// one legal path through the state machine.
pub fn is_legal_subsequence(states: &[String]) -> bool {
    let mut collapsed: Vec<&str> = states.iter().map(String::as_str).collect();
    collapsed.dedup();
    LEGAL_PATHS.iter().any(|path| {
        let mut it = path.iter();
        collapsed.iter().all(|s| it.any(|p| p == s))
    })
}

pub fn is_monotone(progress: &[f64]) -> bool {
    progress.windows(2).all(|w| w[0] <= w[1])
}
