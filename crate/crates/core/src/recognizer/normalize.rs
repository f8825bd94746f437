//! Torso-anchored normalization.
//!
//! Coordinates are first taken onto the pose file's 1e-6 grid as integers.
//! The torso mean and bounding box are then exact integer quantities, so
//! translating a grid-aligned sequence by a grid-aligned offset produces
//! bit-identical features.

use super::config::LandmarkSubset;
use super::RecognizerError;
use crate::pose::{PoseSequence, TORSO};

/// `frames x (2 * landmarks)` features plus a per-landmark visibility mask.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSequence {
    pub frames: usize,
    pub landmarks: usize,
    pub features: Vec<f64>,
    pub mask: Vec<bool>,
}

impl NormalizedSequence {
    pub fn dim(&self) -> usize {
        2 * self.landmarks
    }

    pub fn frame(&self, f: usize) -> &[f64] {
        &self.features[f * self.dim()..(f + 1) * self.dim()]
    }

    /// Uniformly picks `max_frames` frames when the sequence is longer.
    pub fn subsampled(&self, max_frames: usize) -> NormalizedSequence {
        if self.frames <= max_frames {
            return self.clone();
        }
        let (d, l) = (self.dim(), self.landmarks);
        let mut features = Vec::with_capacity(max_frames * d);
        let mut mask = Vec::with_capacity(max_frames * l);
        for i in 0..max_frames {
            let src = i * self.frames / max_frames;
            features.extend_from_slice(self.frame(src));
            mask.extend_from_slice(&self.mask[src * l..(src + 1) * l]);
        }
        NormalizedSequence {
            frames: max_frames,
            landmarks: l,
            features,
            mask,
        }
    }
}

fn micros(v: f32) -> i64 {
    (v as f64 * 1e6).round() as i64
}

/// Subtracts the mean visible torso position and divides by the torso
/// bounding-box diagonal, both taken over the whole sequence. Landmarks with
/// zero visibility become `(0, 0)` with a cleared mask bit.
pub fn normalize(seq: &PoseSequence, subset: &LandmarkSubset) -> Result<NormalizedSequence, RecognizerError> {
    let (mut sx, mut sy, mut count) = (0i64, 0i64, 0i64);
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
    for frame in seq.frames() {
        for &t in &TORSO {
            let lm = frame[t];
            if lm.visibility > 0.0 {
                let (x, y) = (micros(lm.x), micros(lm.y));
                sx += x;
                sy += y;
                count += 1;
                min_x = min_x.min(x);
                max_x = max_x.max(x);
                min_y = min_y.min(y);
                max_y = max_y.max(y);
            }
        }
    }
    if count == 0 {
        return Err(RecognizerError::DegeneratePose);
    }
    let (w, h) = ((max_x - min_x) as f64, (max_y - min_y) as f64);
    let diag = (w * w + h * h).sqrt();
    if diag == 0.0 {
        return Err(RecognizerError::DegeneratePose);
    }
    let denom = count as f64 * diag;
    let idx = subset.indices();
    let mut features = Vec::with_capacity(seq.len() * idx.len() * 2);
    let mut mask = Vec::with_capacity(seq.len() * idx.len());
    for frame in seq.frames() {
        for &i in idx {
            let lm = frame[i];
            if lm.visibility > 0.0 {
                features.push((micros(lm.x) * count - sx) as f64 / denom);
                features.push((micros(lm.y) * count - sy) as f64 / denom);
                mask.push(true);
            } else {
                features.extend_from_slice(&[0.0, 0.0]);
                mask.push(false);
            }
        }
    }
    Ok(NormalizedSequence {
        frames: seq.len(),
        landmarks: idx.len(),
        features,
        mask,
    })
}
