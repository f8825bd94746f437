//! HTTP service for the record → check → recognize → browse loop.
//!
//! Uploads are stored, checked by the quality gate and recognized in a
//! background task while clients poll status. Raw media is deleted as soon as
//! landmarks have been extracted unless retention is enabled.

mod api;
mod pipeline;
mod store;

pub use api::{router, PRIVACY_STATEMENT};
pub use pipeline::{process, Source};
pub use store::{eta, progress, Store, Submission, SubmissionState, MEDIA_EXT, POSE_EXT};

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;

use crate::catalog::{load_catalog, VocabularyCatalog};
use crate::eval::{latency_fit, load_latency_csv, LatencyModel};
use crate::gate::GateThresholds;
use crate::pose::{FileBackedEstimator, PoseEstimator, SyntheticEstimator};
use crate::recognizer::{load_model, TrainedModel};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("submission `{0}` not found")]
    NotFound(String),
    #[error("illegal transition {from:?} -> {to:?}")]
    Transition { from: SubmissionState, to: SubmissionState },
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("storage: {0}")]
    Storage(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_MAX_BODY_BYTES: usize = 100 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub port: u16,
    pub model_path: PathBuf,
    pub catalog_path: PathBuf,
    pub retain_media: bool,
    /// CSV of `(input seconds, prediction seconds)`; `None` uses
    /// [`default_latency_model`].
    pub latency_calibration_path: Option<PathBuf>,
    pub storage_dir: PathBuf,
    pub max_body_bytes: usize,
}

impl ServiceConfig {
    /// Reads `PORT`, `MODEL_PATH`, `CATALOG_PATH`, `RETAIN_MEDIA`,
    /// `LATENCY_CALIBRATION_PATH`, `STORAGE_DIR` and `MAX_BODY_BYTES`.
    pub fn from_env() -> Result<Self, ServiceError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ServiceError> {
        let bad = |k: &str, v: &str| ServiceError::Config(format!("{k}={v} is not valid"));
        let port = match get("PORT") {
            Some(v) => v.parse().map_err(|_| bad("PORT", &v))?,
            None => DEFAULT_PORT,
        };
        let retain_media = match get("RETAIN_MEDIA").as_deref().map(str::to_ascii_lowercase).as_deref() {
            None | Some("") | Some("0") | Some("false") | Some("no") => false,
            Some("1") | Some("true") | Some("yes") => true,
            Some(v) => return Err(bad("RETAIN_MEDIA", v)),
        };
        let max_body_bytes = match get("MAX_BODY_BYTES") {
            Some(v) => v.parse().map_err(|_| bad("MAX_BODY_BYTES", &v))?,
            None => DEFAULT_MAX_BODY_BYTES,
        };
        Ok(Self {
            port,
            model_path: get("MODEL_PATH").unwrap_or_else(|| "model.bin".into()).into(),
            catalog_path: get("CATALOG_PATH").unwrap_or_else(|| "catalog.tsv".into()).into(),
            retain_media,
            latency_calibration_path: get("LATENCY_CALIBRATION_PATH").map(PathBuf::from),
            storage_dir: get("STORAGE_DIR").unwrap_or_else(|| "submissions".into()).into(),
            max_body_bytes,
        })
    }
}

/// Linear fit of the reference latency measurements shipped in
/// `fixtures/latency_points.csv`.
pub fn default_latency_model() -> LatencyModel {
    let pts = crate::eval::parse_latency_csv(include_str!("../../fixtures/latency_points.csv")).expect("bundled csv");
    latency_fit(&pts).expect("bundled points are non-degenerate")
}

/// Shared, immutable-after-start service state.
pub struct AppState {
    pub model: TrainedModel,
    pub catalog: VocabularyCatalog,
    /// Used for `pose` uploads.
    pub pose_estimator: Box<dyn PoseEstimator>,
    /// Used for `media` uploads. Video decoding is outside this crate; the
    /// default accepts synthetic-signer specs.
    pub media_estimator: Box<dyn PoseEstimator>,
    pub latency: LatencyModel,
    pub thresholds: GateThresholds,
    pub retain_media: bool,
    pub max_body_bytes: usize,
    pub store: Store,
}

impl AppState {
    pub fn new(
        model: TrainedModel,
        catalog: VocabularyCatalog,
        store: Store,
        latency: LatencyModel,
        retain_media: bool,
    ) -> Result<Self, ServiceError> {
        if model.catalog_fingerprint() != catalog.fingerprint() {
            return Err(ServiceError::Config("model was trained for a different catalog".into()));
        }
        Ok(Self {
            model,
            catalog,
            pose_estimator: Box::new(FileBackedEstimator),
            media_estimator: Box::new(SyntheticEstimator),
            latency,
            thresholds: GateThresholds::default(),
            retain_media,
            max_body_bytes: DEFAULT_MAX_BODY_BYTES,
            store,
        })
    }

    pub fn from_config(cfg: &ServiceConfig) -> Result<Self, ServiceError> {
        let cfg_err = |what: &str, e: &dyn std::fmt::Display| ServiceError::Config(format!("{what}: {e}"));
        let catalog = load_catalog(&cfg.catalog_path).map_err(|e| cfg_err("catalog", &e))?;
        let model = load_model(&cfg.model_path).map_err(|e| cfg_err("model", &e))?;
        let latency = match &cfg.latency_calibration_path {
            Some(p) => load_latency_csv(p)
                .and_then(|pts| latency_fit(&pts))
                .map_err(|e| cfg_err("latency calibration", &e))?,
            None => default_latency_model(),
        };
        let mut state = Self::new(model, catalog, Store::open(&cfg.storage_dir)?, latency, cfg.retain_media)?;
        state.max_body_bytes = cfg.max_body_bytes;
        Ok(state)
    }
}

pub async fn serve(state: AppState, port: u16) -> Result<(), ServiceError> {
    let app = router(Arc::new(state));
    let listener = tokio::net::TcpListener::bind(SocketAddr::from(([0, 0, 0, 0], port))).await?;
    axum::serve(listener, app).await?;
    Ok(())
}
