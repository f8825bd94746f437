use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::json;

use super::pipeline::{process, Source};
use super::store::{eta, progress, unix_now, Submission, SubmissionState};
use super::{AppState, ServiceError};
use crate::catalog::GlossEntry;
use crate::gate::SubmissionReport;
use crate::ranking::{compose_view, filter_results, FilterCriteria, ResultView, ViewKind};

pub const PRIVACY_STATEMENT: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>Sign dictionary: privacy</title></head>
<body><h1>Privacy</h1>
<p>Your recording is used only to look up the sign you performed. As soon as the body and hand
landmarks have been extracted, the recording is discarded; only the landmark positions and the
lookup results are kept so the results page can be shown.</p>
<p>No account is needed and recordings are not used for analytics or training.</p>
</body></html>
";

pub struct ApiError {
    status: StatusCode,
    message: String,
    state: Option<SubmissionState>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into(), state: None }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Transition { .. } => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(s) = self.state {
            body["state"] = json!(s);
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.max_body_bytes;
    Router::new()
        .route("/", get(privacy))
        .route("/api/v1/health", get(health))
        .route("/api/v1/vocabulary", get(vocabulary))
        .route("/api/v1/submissions", post(create))
        .route("/api/v1/submissions/{id}/status", get(status))
        .route("/api/v1/submissions/{id}/results", get(results))
        .route("/api/v1/submissions/{id}/media", delete(purge_media))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

async fn privacy() -> Html<&'static str> {
    Html(PRIVACY_STATEMENT)
}

async fn health(State(st): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({
        "ok": true,
        "model_fingerprint": st.model.catalog_fingerprint(),
        "classes": st.model.num_classes(),
    }))
}

async fn vocabulary(State(st): State<Arc<AppState>>) -> Json<Vec<GlossEntry>> {
    Json(st.catalog.entries().to_vec())
}

fn parse_seconds(name: &str, text: &str) -> ApiResult<f64> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, format!("{name} must be a number")))
}

/// Multipart fields: `media` or `pose` (the upload) and optional
/// `trim_start_s` / `trim_end_s`. A body cut off mid-upload is accepted and
/// then rejected by the gate as an incomplete upload.
async fn create(State(st): State<Arc<AppState>>, mut form: Multipart) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let mut upload: Option<(Source, Vec<u8>)> = None;
    let mut interrupted = false;
    let (mut start, mut end) = (None, None);
    loop {
        let mut field = match form.next_field().await {
            Ok(Some(f)) => f,
            Ok(None) => break,
            Err(e) if e.status() == StatusCode::PAYLOAD_TOO_LARGE => {
                return Err(ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, e.body_text()));
            }
            Err(_) if upload.is_some() => {
                interrupted = true;
                break;
            }
            Err(e) => return Err(ApiError::new(StatusCode::BAD_REQUEST, e.body_text())),
        };
        let name = field.name().unwrap_or_default().to_string();
        match name.as_str() {
            "media" | "pose" => {
                let source = if name == "pose" { Source::Pose } else { Source::Media };
                let mut bytes = Vec::new();
                loop {
                    match field.chunk().await {
                        Ok(Some(c)) => bytes.extend_from_slice(&c),
                        Ok(None) => break,
                        Err(e) if e.status() == StatusCode::PAYLOAD_TOO_LARGE => {
                            return Err(ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, e.body_text()));
                        }
                        Err(_) => {
                            interrupted = true;
                            break;
                        }
                    }
                }
                upload = Some((source, bytes));
                if interrupted {
                    break;
                }
            }
            "trim_start_s" | "trim_end_s" => {
                let text = field.text().await.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.body_text()))?;
                let v = parse_seconds(&name, &text)?;
                if name == "trim_start_s" {
                    start = Some(v);
                } else {
                    end = Some(v);
                }
            }
            other => {
                return Err(ApiError::new(StatusCode::BAD_REQUEST, format!("unexpected field `{other}`")));
            }
        }
    }
    let (source, bytes) = upload.ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "missing `media` or `pose` field"))?;
    if bytes.is_empty() && !interrupted {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "empty upload"));
    }
    let trim = match (start, end) {
        (None, None) => None,
        (Some(s), Some(e)) if s < e && s >= 0.0 => Some((s, e)),
        (Some(_), Some(_)) => return Err(ApiError::new(StatusCode::BAD_REQUEST, "trim bounds must satisfy 0 <= start < end")),
        _ => return Err(ApiError::new(StatusCode::BAD_REQUEST, "give both trim_start_s and trim_end_s")),
    };

    let id = uuid::Uuid::new_v4().simple().to_string();
    st.store.insert(Submission::new(id.clone(), st.retain_media, trim), &bytes)?;
    tokio::spawn(process(st.clone(), id.clone(), source, interrupted));
    Ok((StatusCode::ACCEPTED, Json(json!({ "id": id }))))
}

#[derive(Debug, Serialize)]
struct StatusDoc {
    id: String,
    state: SubmissionState,
    progress: f64,
    eta_s: f64,
    elapsed_s: f64,
    predicted_total_s: Option<f64>,
    /// `elapsed/predicted` as shown under the progress bar, e.g. `6.4/7.0s`.
    display: Option<String>,
    input_duration_s: Option<f64>,
    report: Option<SubmissionReport>,
    report_message: Option<String>,
    media_retained: bool,
    media_purged_at: Option<f64>,
    error: Option<String>,
    created_at: f64,
    updated_at: f64,
}

fn lookup(st: &AppState, id: &str) -> ApiResult<Submission> {
    st.store.get(id).ok_or_else(|| ServiceError::NotFound(id.to_string()).into())
}

async fn status(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<StatusDoc>> {
    let rec = lookup(&st, &id)?;
    let elapsed = rec.predicting_elapsed();
    let total = rec.predicted_total_s;
    Ok(Json(StatusDoc {
        id: rec.id.clone(),
        state: rec.state,
        progress: progress(rec.state, elapsed, total),
        eta_s: eta(rec.state, elapsed, total),
        elapsed_s: elapsed,
        predicted_total_s: total,
        display: total.map(|t| format!("{elapsed:.1}/{t:.1}s")),
        input_duration_s: rec.input_duration_s,
        report_message: rec.report.as_ref().filter(|r| !r.issues.is_empty()).map(|r| r.render_message()),
        report: rec.report,
        media_retained: rec.media_retained,
        media_purged_at: rec.media_purged_at,
        error: rec.error,
        created_at: rec.created_at,
        updated_at: rec.updated_at,
    }))
}

/// `view=compact|detailed` (default compact) plus metadata filters, which
/// only apply to the detailed view.
async fn results(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Json<ResultView>> {
    let rec = lookup(&st, &id)?;
    let ranked = match (rec.state, rec.results) {
        (SubmissionState::Done, Some(r)) => r,
        (state, _) => {
            return Err(ApiError {
                status: StatusCode::CONFLICT,
                message: format!("submission is {}, results exist only when done", state.as_str()),
                state: Some(state),
            })
        }
    };
    let kind = match q.get("view").map(String::as_str) {
        None | Some("compact") => ViewKind::Compact,
        Some("detailed") => ViewKind::Detailed,
        Some(v) => return Err(ApiError::new(StatusCode::BAD_REQUEST, format!("unknown view `{v}`"))),
    };
    let filtered = match kind {
        ViewKind::Compact => ranked,
        ViewKind::Detailed => {
            let criteria = FilterCriteria::from_pairs(&q).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
            filter_results(&ranked, &criteria)
        }
    };
    if filtered.is_empty() {
        return Ok(Json(ResultView { kind, primary: None, grid: Vec::new() }));
    }
    let view = compose_view(&filtered, kind).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(view))
}

/// Idempotent; the pose track and results stay.
async fn purge_media(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    lookup(&st, &id)?;
    st.store.remove_media(&id)?;
    let rec = st.store.update(&id, |r| {
        r.media_retained = false;
        r.media_purged_at = Some(unix_now());
    })?;
    Ok(Json(json!({ "id": rec.id, "media_purged_at": rec.media_purged_at })))
}
