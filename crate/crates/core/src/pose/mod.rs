//! Pose sequences over a fixed 75-landmark schema.
//!
//! Indices 0..=32 are body points (nose, face, shoulders, arms, hips, legs),
//! 33..=53 the left hand and 54..=74 the right hand. Coordinates are
//! normalized to the frame, `(0, 0)` top-left.

pub mod dataset;
mod estimator;
mod format;
mod ops;
pub mod synth;

pub use estimator::{estimate, FileBackedEstimator, EstimatorCapability, PoseEstimator, SyntheticEstimator};
pub use format::{parse_pose_file, parse_pose_str, parse_pose_tracks, write_pose_file, write_pose_string, write_pose_tracks};
pub use ops::{quantize_resolution, trim, STANDARD_HEIGHT, STANDARD_WIDTH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NUM_LANDMARKS: usize = 75;
pub const BODY: std::ops::Range<usize> = 0..33;
pub const LEFT_HAND: std::ops::Range<usize> = 33..54;
pub const RIGHT_HAND: std::ops::Range<usize> = 54..75;
/// Nose, eyes, ears and mouth.
pub const FACE: std::ops::Range<usize> = 0..11;
/// Shoulders and hips.
pub const TORSO: [usize; 4] = [11, 12, 23, 24];

pub mod body {
    pub const NOSE: usize = 0;
    pub const LEFT_SHOULDER: usize = 11;
    pub const RIGHT_SHOULDER: usize = 12;
    pub const LEFT_ELBOW: usize = 13;
    pub const RIGHT_ELBOW: usize = 14;
    pub const LEFT_WRIST: usize = 15;
    pub const RIGHT_WRIST: usize = 16;
    pub const LEFT_HIP: usize = 23;
    pub const RIGHT_HIP: usize = 24;
    /// Body-model hand points (pinky, index, thumb) per side.
    pub const LEFT_HAND_POINTS: [usize; 3] = [17, 19, 21];
    pub const RIGHT_HAND_POINTS: [usize; 3] = [18, 20, 22];
}

#[derive(Debug, Error, PartialEq)]
pub enum PoseError {
    #[error("malformed header: {0}")]
    Header(String),
    #[error("frame {frame}: expected {expected} landmarks, found {found}")]
    LandmarkCount { frame: usize, expected: usize, found: usize },
    #[error("frame {frame}, landmark {landmark}: value {value} outside [0, 1]")]
    OutOfRange { frame: usize, landmark: usize, value: f64 },
    #[error("frame {frame}: {msg}")]
    Frame { frame: usize, msg: String },
    #[error("sequence has no frames")]
    Empty,
    #[error("invalid sequence parameter: {0}")]
    Invalid(String),
    #[error("start after end")]
    StartAfterEnd,
    #[error("trim bounds [{start}, {end}] outside [0, {duration}]")]
    TrimOutOfRange { start: f64, end: f64, duration: f64 },
    #[error("resolution ratio {0} outside (0, 1]")]
    Ratio(f64),
    #[error("undecodable media: {0}")]
    Undecodable(String),
    #[error("estimator failure: {0}")]
    Estimator(String),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Landmark {
    pub x: f32,
    pub y: f32,
    pub visibility: f32,
}

impl Landmark {
    pub fn new(x: f32, y: f32, visibility: f32) -> Self {
        Self { x, y, visibility }
    }

    fn is_valid(&self) -> bool {
        [self.x, self.y, self.visibility]
            .iter()
            .all(|v| v.is_finite() && (0.0..=1.0).contains(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseFrame(Vec<Landmark>);

impl PoseFrame {
    pub fn new(landmarks: Vec<Landmark>) -> Result<Self, PoseError> {
        if landmarks.len() != NUM_LANDMARKS {
            return Err(PoseError::LandmarkCount {
                frame: 0,
                expected: NUM_LANDMARKS,
                found: landmarks.len(),
            });
        }
        for (i, lm) in landmarks.iter().enumerate() {
            if !lm.is_valid() {
                let value = [lm.x, lm.y, lm.visibility]
                    .into_iter()
                    .find(|v| !(v.is_finite() && (0.0..=1.0).contains(v)))
                    .unwrap_or(f32::NAN);
                return Err(PoseError::OutOfRange {
                    frame: 0,
                    landmark: i,
                    value: value as f64,
                });
            }
        }
        Ok(Self(landmarks))
    }

    pub fn landmarks(&self) -> &[Landmark] {
        &self.0
    }

    /// Mutation is crate-internal so the range invariant cannot be broken
    /// from outside; callers clamp before writing.
    pub(crate) fn landmarks_mut(&mut self) -> &mut [Landmark] {
        &mut self.0
    }
}

impl std::ops::Index<usize> for PoseFrame {
    type Output = Landmark;
    fn index(&self, i: usize) -> &Landmark {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseSequence {
    frames: Vec<PoseFrame>,
    fps: f64,
    width: u32,
    height: u32,
}

impl PoseSequence {
    pub fn new(frames: Vec<PoseFrame>, fps: f64, resolution: (u32, u32)) -> Result<Self, PoseError> {
        if frames.is_empty() {
            return Err(PoseError::Empty);
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(PoseError::Invalid(format!("fps must be > 0, got {fps}")));
        }
        if resolution.0 < 1 || resolution.1 < 1 {
            return Err(PoseError::Invalid(format!(
                "resolution must be at least 1x1, got {}x{}",
                resolution.0, resolution.1
            )));
        }
        Ok(Self {
            frames,
            fps,
            width: resolution.0,
            height: resolution.1,
        })
    }

    pub fn frames(&self) -> &[PoseFrame] {
        &self.frames
    }

    pub(crate) fn frames_mut(&mut self) -> &mut [PoseFrame] {
        &mut self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn source_resolution(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub(crate) fn set_source_resolution(&mut self, w: u32, h: u32) {
        self.width = w;
        self.height = h;
    }

    pub fn duration_s(&self) -> f64 {
        self.frames.len() as f64 / self.fps
    }

    /// Every coordinate shifted by `(dx, dy)`. Fails if any landmark would
    /// leave the unit square.
    pub fn translated(&self, dx: f32, dy: f32) -> Result<Self, PoseError> {
        let mut out = self.clone();
        for (f, frame) in out.frames.iter_mut().enumerate() {
            for (i, lm) in frame.0.iter_mut().enumerate() {
                lm.x += dx;
                lm.y += dy;
                for v in [lm.x, lm.y] {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(PoseError::OutOfRange {
                            frame: f,
                            landmark: i,
                            value: v as f64,
                        });
                    }
                }
            }
        }
        Ok(out)
    }
}
