mod common;

use std::time::Duration;

use axum::http::{Request, StatusCode};
use common::*;
use signdict::pose::{PoseError, PoseEstimator, PoseSequence, EstimatorCapability, SyntheticEstimator};
use signdict::service::router;

fn fixture(name: &str) -> Vec<u8> {
    std::fs::read(format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn legal_subsequence_helper() {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    assert!(is_legal_subsequence(&s(&["received", "received", "predicting", "done"])));
    assert!(is_legal_subsequence(&s(&["checking", "rejected"])));
    assert!(!is_legal_subsequence(&s(&["rejected", "done"])));
    assert!(!is_legal_subsequence(&s(&["done", "predicting"])));
    assert!(!is_legal_subsequence(&s(&["predicting", "rejected"])));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn pose_upload_lifecycle_and_views() {
    let dir = tempfile::tempdir().unwrap();
    let (state, app) = app(dir.path(), false);
    let id = submit(&app, &[("pose", &fixture("clean_640x480.pose"))]).await;
    let seen = poll_until_terminal(&app, &id).await;
    let states: Vec<String> = seen.iter().map(|s| s.0.clone()).collect();
    assert_eq!(states.last().unwrap(), "done");
    assert!(is_legal_subsequence(&states), "{states:?}");
    assert!(is_monotone(&seen.iter().map(|s| s.1).collect::<Vec<_>>()));
    assert!(state.store.media_files().unwrap().is_empty());
    assert!(state.store.pose_path(&id).exists());

    let (code, st) = send(&app, get(&format!("/api/v1/submissions/{id}/status"))).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!((st["progress"].as_f64(), st["eta_s"].as_f64()), (Some(1.0), Some(0.0)));
    assert_eq!(st["report"]["verdict"], "proceed");
    assert!(st["display"].as_str().unwrap().ends_with('s'));
    assert!((st["input_duration_s"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let (code, compact) = send(&app, get(&format!("/api/v1/submissions/{id}/results"))).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(compact["kind"], "compact");
    assert_eq!(compact["primary"]["rank"], 1);
    assert_eq!(compact["grid"].as_array().unwrap().len(), 6);

    let (_, detailed) = send(&app, get(&format!("/api/v1/submissions/{id}/results?view=detailed&hands=one"))).await;
    let grid = detailed["grid"].as_array().unwrap();
    assert!(!grid.is_empty() && grid.len() <= 20);
    assert!(grid.iter().all(|r| r["metadata"]["hands"] == "one"));
    assert!(grid.iter().enumerate().all(|(i, r)| r["rank"] == i + 1));

    // compact ignores filters
    let (_, c2) = send(&app, get(&format!("/api/v1/submissions/{id}/results?view=compact&hands=one"))).await;
    assert_eq!(c2, compact);

    let (code, _) = send(&app, get(&format!("/api/v1/submissions/{id}/results?view=detailed&hands=three"))).await;
    assert_eq!(code, StatusCode::BAD_REQUEST);
    let (code, _) = send(&app, get(&format!("/api/v1/submissions/{id}/results?view=huge"))).await;
    assert_eq!(code, StatusCode::BAD_REQUEST);
    let (_, none) = send(&app, get(&format!("/api/v1/submissions/{id}/results?view=detailed&hands=one&hands=two&handshape=nope"))).await;
    assert_eq!(none["grid"].as_array().unwrap().len(), 0);

    // no response carries raw media
    assert!(!st.to_string().contains("POSE v1"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn trimmed_synthetic_media() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = app(dir.path(), false);
    let id = submit(&app, &[("media", b"class=3,seed=1,frames=90"), ("trim_start_s", b"1.0"), ("trim_end_s", b"2.0")]).await;
    let seen = poll_until_terminal(&app, &id).await;
    assert_eq!(seen.last().unwrap().0, "done");
    let (_, st) = send(&app, get(&format!("/api/v1/submissions/{id}/status"))).await;
    assert!((st["input_duration_s"].as_f64().unwrap() - 1.0).abs() < 1e-12, "{st}");

    // bounds beyond the input fail the submission rather than the request
    let id = submit(&app, &[("media", b"class=3,seed=1,frames=30"), ("trim_start_s", b"1.0"), ("trim_end_s", b"2.0")]).await;
    let seen = poll_until_terminal(&app, &id).await;
    assert_eq!(seen.last().unwrap().0, "failed");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn gate_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let (state, app) = app(dir.path(), false);

    let id = submit(&app, &[("pose", &fixture("truncated.pose"))]).await;
    let seen = poll_until_terminal(&app, &id).await;
    assert_eq!(seen.last().unwrap().0, "rejected");
    let (_, st) = send(&app, get(&format!("/api/v1/submissions/{id}/status"))).await;
    assert_eq!(st["report"]["verdict"], "reject");
    assert_eq!(st["report"]["issues"][0]["code"], "incomplete_upload");
    assert!(st["report_message"].as_str().unwrap().starts_with("**"));
    let (code, body) = send(&app, get(&format!("/api/v1/submissions/{id}/results"))).await;
    assert_eq!((code, body["state"].as_str()), (StatusCode::CONFLICT, Some("rejected")));

    let id = submit(&app, &[("pose", &fixture("two_person.pose"))]).await;
    assert_eq!(poll_until_terminal(&app, &id).await.last().unwrap().0, "done");
    let (_, st) = send(&app, get(&format!("/api/v1/submissions/{id}/status"))).await;
    assert_eq!(st["report"]["verdict"], "proceed_with_warnings");
    assert_eq!(st["report"]["issues"][0]["code"], "multiple_people");

    let id = submit(&app, &[("pose", b"this is not a pose file")]).await;
    assert_eq!(poll_until_terminal(&app, &id).await.last().unwrap().0, "rejected");
    let (_, st) = send(&app, get(&format!("/api/v1/submissions/{id}/status"))).await;
    assert_eq!(st["report"]["issues"][0]["code"], "undecodable");

    // a body that stops mid-upload
    let mut body = multipart(&[("pose", &fixture("clean_640x480.pose"))]);
    body.truncate(body.len() / 2);
    let (code, v) = send(&app, post_submission(body)).await;
    assert_eq!(code, StatusCode::ACCEPTED, "{v}");
    let id = v["id"].as_str().unwrap().to_string();
    assert_eq!(poll_until_terminal(&app, &id).await.last().unwrap().0, "rejected");
    let (_, st) = send(&app, get(&format!("/api/v1/submissions/{id}/status"))).await;
    assert_eq!(st["report"]["issues"][0]["code"], "incomplete_upload");

    assert!(state.store.media_files().unwrap().is_empty());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn request_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (model, catalog) = tiny_model();
    let mut st = app_state(model, catalog, dir.path(), false);
    st.max_body_bytes = 4096;
    let app = router(std::sync::Arc::new(st));

    let (code, _) = send(&app, get("/api/v1/submissions/nope/status")).await;
    assert_eq!(code, StatusCode::NOT_FOUND);
    let (code, _) = send(&app, get("/api/v1/submissions/nope/results")).await;
    assert_eq!(code, StatusCode::NOT_FOUND);
    let del = Request::delete("/api/v1/submissions/nope/media").body(axum::body::Body::empty()).unwrap();
    assert_eq!(send(&app, del).await.0, StatusCode::NOT_FOUND);

    let (code, _) = send(&app, post_submission(multipart(&[("pose", b"")]))).await;
    assert_eq!(code, StatusCode::BAD_REQUEST);
    let (code, _) = send(&app, post_submission(multipart(&[("trim_start_s", b"1")]))).await;
    assert_eq!(code, StatusCode::BAD_REQUEST);
    let (code, _) = send(&app, post_submission(multipart(&[("media", b"class=1,seed=1"), ("trim_start_s", b"1")]))).await;
    assert_eq!(code, StatusCode::BAD_REQUEST);
    let (code, _) = send(&app, post_submission(multipart(&[("media", b"class=1,seed=1"), ("trim_start_s", b"2"), ("trim_end_s", b"1")]))).await;
    assert_eq!(code, StatusCode::BAD_REQUEST);
    let (code, _) = send(&app, post_submission(multipart(&[("media", b"class=1,seed=1"), ("extra", b"x")]))).await;
    assert_eq!(code, StatusCode::BAD_REQUEST);
    let (code, _) = send(&app, post_submission(multipart(&[("pose", &vec![b'a'; 10_000])]))).await;
    assert_eq!(code, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn media_retention_and_purge() {
    let dir = tempfile::tempdir().unwrap();
    let (state, app) = app(dir.path(), true);
    let id = submit(&app, &[("media", b"class=2,seed=4")]).await;
    assert_eq!(poll_until_terminal(&app, &id).await.last().unwrap().0, "done");
    assert_eq!(state.store.media_files().unwrap().len(), 1);
    let (_, st) = send(&app, get(&format!("/api/v1/submissions/{id}/status"))).await;
    assert_eq!(st["media_retained"], true);

    for _ in 0..2 {
        let del = Request::delete(format!("/api/v1/submissions/{id}/media")).body(axum::body::Body::empty()).unwrap();
        let (code, v) = send(&app, del).await;
        assert_eq!(code, StatusCode::OK);
        assert!(v["media_purged_at"].as_f64().is_some());
    }
    assert!(state.store.media_files().unwrap().is_empty());
    assert!(state.store.pose_path(&id).exists());
    let (code, _) = send(&app, get(&format!("/api/v1/submissions/{id}/results"))).await;
    assert_eq!(code, StatusCode::OK);
}

/// Holds every estimate for a while so a poll can see `checking`.
struct Slow;

impl PoseEstimator for Slow {
    fn capability(&self) -> EstimatorCapability {
        SyntheticEstimator.capability()
    }

    fn estimate_people(&self, media: &[u8]) -> Result<Vec<PoseSequence>, PoseError> {
        std::thread::sleep(Duration::from_millis(300));
        SyntheticEstimator.estimate_people(media)
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn results_conflict_while_in_progress() {
    let dir = tempfile::tempdir().unwrap();
    let (model, catalog) = tiny_model();
    let mut st = app_state(model, catalog, dir.path(), false);
    st.media_estimator = Box::new(Slow);
    let app = router(std::sync::Arc::new(st));
    let id = submit(&app, &[("media", b"class=1,seed=1")]).await;
    let (code, body) = send(&app, get(&format!("/api/v1/submissions/{id}/results"))).await;
    assert_eq!(code, StatusCode::CONFLICT);
    assert!(matches!(body["state"].as_str(), Some("received" | "checking")), "{body}");
    let seen = poll_until_terminal(&app, &id).await;
    assert!(seen.iter().any(|s| s.0 == "checking"));
    assert_eq!(seen.last().unwrap().0, "done");
}

#[tokio::test]
async fn static_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let (state, app) = app(dir.path(), false);
    let (code, health) = send(&app, get("/api/v1/health")).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(health["ok"], true);
    assert_eq!(health["model_fingerprint"], state.catalog.fingerprint());
    let (_, vocab) = send(&app, get("/api/v1/vocabulary")).await;
    assert_eq!(vocab.as_array().unwrap().len(), 10);
    assert_eq!(vocab[0]["rendition_id"], "syn-000");
    let (code, page) = send(&app, get("/")).await;
    assert_eq!(code, StatusCode::OK);
    assert!(page.as_str().unwrap().contains("discarded"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn restart_keeps_finished_records() {
    let dir = tempfile::tempdir().unwrap();
    let id = {
        let (_, app) = app(dir.path(), false);
        let id = submit(&app, &[("media", b"class=2,seed=4")]).await;
        poll_until_terminal(&app, &id).await;
        id
    };
    let (_, app) = app(dir.path(), false);
    let (code, st) = send(&app, get(&format!("/api/v1/submissions/{id}/status"))).await;
    assert_eq!((code, st["state"].as_str()), (StatusCode::OK, Some("done")));
    assert_eq!(send(&app, get(&format!("/api/v1/submissions/{id}/results"))).await.0, StatusCode::OK);
}
