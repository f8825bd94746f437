use std::sync::Arc;
use std::time::Instant;

use super::store::SubmissionState;
use super::{AppState, ServiceError};
use crate::gate::{check_technical, check_visibility, gate, ByteStatus, Verdict};
use crate::pose::{trim, write_pose_tracks, PoseSequence};
use crate::ranking::rank;

/// Which estimator reads an upload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Pose,
    Media,
}

/// Runs one submission from `received` to a terminal state. Any error that
/// escapes the steps marks the submission failed.
pub async fn process(state: Arc<AppState>, id: String, source: Source, interrupted: bool) {
    if let Err(e) = run(&state, &id, source, interrupted).await {
        let msg = e.to_string();
        let _ = state.store.transition(&id, SubmissionState::Failed, |r| r.error = Some(msg));
    }
    if !state.retain_media {
        let _ = state.store.remove_media(&id);
    }
}

async fn run(state: &Arc<AppState>, id: &str, source: Source, interrupted: bool) -> Result<(), ServiceError> {
    state.store.transition(id, SubmissionState::Checking, |_| {})?;

    let st = state.clone();
    let sid = id.to_string();
    let checked = tokio::task::spawn_blocking(move || check(&st, &sid, source, interrupted))
        .await
        .map_err(|e| ServiceError::Storage(format!("check task: {e}")))??;
    let Some(signer) = checked else {
        return Ok(());
    };

    let predicted_total = state.latency.predict(signer.duration_s()).max(1e-3);
    state
        .store
        .transition(id, SubmissionState::Predicting, |r| r.start_predicting(predicted_total))?;

    let st = state.clone();
    let started = Instant::now();
    let ranked = tokio::task::spawn_blocking(move || -> Result<_, String> {
        let dist = st.model.predict(&st.catalog, &signer).map_err(|e| e.to_string())?;
        rank(&dist, &st.catalog).map_err(|e| e.to_string())
    })
    .await
    .map_err(|e| ServiceError::Storage(format!("prediction task: {e}")))?;
    let elapsed = started.elapsed().as_secs_f64();
    match ranked {
        Ok(results) => state.store.transition(id, SubmissionState::Done, |r| {
            r.results = Some(results);
            r.elapsed_s = Some(elapsed);
        })?,
        Err(msg) => state.store.transition(id, SubmissionState::Failed, |r| r.error = Some(msg))?,
    };
    Ok(())
}

/// Pose extraction and the quality gate. Returns the (trimmed) signer track
/// when recognition should go ahead, `None` once the submission is rejected.
/// `interrupted` marks a body that ended before the upload finished.
fn check(state: &AppState, id: &str, source: Source, interrupted: bool) -> Result<Option<PoseSequence>, ServiceError> {
    let media = state.store.read_media(id)?;
    let estimator = match source {
        Source::Pose => &state.pose_estimator,
        Source::Media => &state.media_estimator,
    };
    let extracted = estimator.estimate_people(&media);
    let status = match &extracted {
        _ if interrupted => ByteStatus::Truncated,
        Ok(people) if !people.is_empty() => ByteStatus::Complete,
        Err(_) if estimator.is_truncated(&media) => ByteStatus::Truncated,
        _ => ByteStatus::Undecodable,
    };
    drop(media);
    let people = extracted.unwrap_or_default();
    if !people.is_empty() {
        std::fs::write(state.store.pose_path(id), write_pose_tracks(&people))?;
    }
    if !state.retain_media {
        state.store.remove_media(id)?;
    }

    let resolution = people.first().map_or((0, 0), |p| p.source_resolution());
    let technical = check_technical(resolution, status, &state.thresholds);
    let visibility = if people.is_empty() {
        Vec::new()
    } else {
        check_visibility(&people, &state.thresholds).map_err(|e| ServiceError::Storage(e.to_string()))?
    };
    let report = gate(technical, visibility);
    let duration = people.first().map(|p| p.duration_s());

    if report.verdict == Verdict::Reject {
        state.store.transition(id, SubmissionState::Rejected, |r| {
            r.report = Some(report);
            r.input_duration_s = duration;
        })?;
        return Ok(None);
    }
    let signer = people.into_iter().next().expect("complete upload has a person");
    let rec = state.store.update(id, |r| r.report = Some(report))?;
    let signer = match rec.trim {
        Some((start, end)) => match trim(&signer, start, end) {
            Ok(t) => t,
            Err(e) => {
                state.store.transition(id, SubmissionState::Failed, |r| r.error = Some(format!("trim: {e}")))?;
                return Ok(None);
            }
        },
        None => signer,
    };
    state.store.update(id, |r| r.input_duration_s = Some(signer.duration_s()))?;
    Ok(Some(signer))
}
