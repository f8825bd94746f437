//! Offline evaluation: top-k accuracy, per-class and per-feature breakdowns,
//! graded nDCG, resolution sweeps and the latency model.

mod accuracy;
mod latency;
mod ndcg;
mod report;

pub use accuracy::{
    evaluate, feature_group_accuracy, per_class_accuracy, mean_ndcg, predict_all, resolution_sweep, topk_accuracy,
    AccuracyReport, GroupAccuracy, PerClassSummary, Scored, SweepPoint,
};
pub use latency::{latency_fit, load_latency_csv, parse_latency_csv, LatencyModel};
pub use ndcg::{dcg, dcg_oracle, grades, ndcg, rel_grade, NdcgParams, OracleResult, RelevanceGrade, ORACLE_MAX_LEN};
pub use report::EvalReport;

use thiserror::Error;

use crate::pose::PoseError;
use crate::ranking::RankingError;
use crate::recognizer::RecognizerError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("relevance grade {0} is not one of 0, 0.5, 1")]
    Grade(f64),
    #[error("cutoff p = {p} invalid for a list of {len}")]
    Cutoff { p: usize, len: usize },
    #[error("oracle supports at most 8 grades, got {0}")]
    TooLong(usize),
    #[error("k = {0} must be >= 1")]
    K(usize),
    #[error("empty test set")]
    Empty,
    #[error("latency fit: {0}")]
    Latency(String),
    #[error("resolution ratio {0} outside (0, 1]")]
    Ratio(f64),
    #[error(transparent)]
    Recognizer(#[from] RecognizerError),
    #[error(transparent)]
    Pose(#[from] PoseError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error("io error: {0}")]
    Io(String),
}
