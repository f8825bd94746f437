//! Drives the HTTP API in-process: submit a synthetic recording, poll the
//! status document, then fetch the compact result view.
//!
//! cargo run --example service
//!
//! For a listening server use `signdict serve` instead.

use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use signdict::pose::synth::{synthesize_dataset, synthetic_catalog, SynthConfig};
use signdict::recognizer::{train, AugmentationConfig, LandmarkSubset, ModelConfig, TrainConfig};
use signdict::service::{default_latency_model, router, AppState, Store};

async fn call(app: &axum::Router, req: Request<Body>) -> Value {
    let resp = app.clone().oneshot(req).await.unwrap();
    serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap()
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = synthetic_catalog(10);
    let data = synthesize_dataset(&SynthConfig { per_class: 10, frames: 30, ..Default::default() })?;
    let tc = TrainConfig { epochs: 3, landmark_subset: LandmarkSubset::compact(), ..Default::default() };
    let model = train(&data, &catalog, &tc, &ModelConfig::compact(), &AugmentationConfig::default())?;

    let storage = std::env::temp_dir().join("signdict-example-store");
    let state = AppState::new(model, catalog, Store::open(&storage)?, default_latency_model(), false)?;
    let app = router(Arc::new(state));

    let boundary = "b0undary";
    let body = format!(
        "--{boundary}\r\nContent-Disposition: form-data; name=\"media\"; filename=\"rec\"\r\n\r\nclass=4,seed=7\r\n--{boundary}--\r\n"
    );
    let req = Request::post("/api/v1/submissions")
        .header("content-type", format!("multipart/form-data; boundary={boundary}"))
        .body(Body::from(body))?;
    let id = call(&app, req).await["id"].as_str().unwrap().to_string();
    println!("submitted {id}");

    loop {
        let st = call(&app, Request::get(format!("/api/v1/submissions/{id}/status")).body(Body::empty())?).await;
        println!("  {} progress {:.1}% {}", st["state"], 100.0 * st["progress"].as_f64().unwrap(), st["display"]);
        if matches!(st["state"].as_str(), Some("done" | "rejected" | "failed")) {
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }

    let view = call(&app, Request::get(format!("/api/v1/submissions/{id}/results")).body(Body::empty())?).await;
    println!("top result: {} ({})", view["primary"]["gloss"], view["primary"]["confidence"]);
    for r in view["grid"].as_array().unwrap() {
        println!("  #{} {} {}", r["rank"], r["gloss"], r["confidence"]);
    }
    Ok(())
}
