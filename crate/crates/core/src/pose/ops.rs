use super::{PoseError, PoseSequence};

pub const STANDARD_WIDTH: u32 = 640;
pub const STANDARD_HEIGHT: u32 = 480;

// Guards frame-boundary arithmetic against `n / fps * fps` landing one ulp off.
const FRAME_EPS: f64 = 1e-9;

/// Keeps frames `floor(start_s * fps) ..= ceil(end_s * fps) - 1`.
pub fn trim(seq: &PoseSequence, start_s: f64, end_s: f64) -> Result<PoseSequence, PoseError> {
    let duration = seq.duration_s();
    if !(start_s.is_finite() && end_s.is_finite()) {
        return Err(PoseError::TrimOutOfRange { start: start_s, end: end_s, duration });
    }
    if start_s >= end_s {
        return Err(PoseError::StartAfterEnd);
    }
    if start_s < 0.0 || end_s > duration + FRAME_EPS {
        return Err(PoseError::TrimOutOfRange { start: start_s, end: end_s, duration });
    }
    let fps = seq.fps();
    let lo = (start_s * fps + FRAME_EPS).floor() as usize;
    let hi = ((end_s * fps - FRAME_EPS).ceil() as usize).min(seq.len());
    if lo >= hi {
        return Err(PoseError::TrimOutOfRange { start: start_s, end: end_s, duration });
    }
    let mut out = seq.clone();
    out.frames = seq.frames()[lo..hi].to_vec();
    Ok(out)
}

fn grid(extent: u32, ratio: f64) -> u32 {
    ((extent as f64 * ratio).round() as u32).max(2)
}

fn snap(v: f32, cells: f64) -> f32 {
    ((v as f64 * cells).round() / cells) as f32
}

/// Simulates capture at `ratio` of the 640x480 standard by snapping every
/// coordinate to the reduced pixel grid. Visibility is left untouched.
pub fn quantize_resolution(seq: &PoseSequence, ratio: f64) -> Result<PoseSequence, PoseError> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(PoseError::Ratio(ratio));
    }
    let w = grid(STANDARD_WIDTH, ratio);
    let h = grid(STANDARD_HEIGHT, ratio);
    let (cx, cy) = ((w - 1) as f64, (h - 1) as f64);
    let mut out = seq.clone();
    for frame in out.frames_mut() {
        for lm in frame.landmarks_mut() {
            lm.x = snap(lm.x, cx);
            lm.y = snap(lm.y, cy);
        }
    }
    out.set_source_resolution(w, h);
    Ok(out)
}
