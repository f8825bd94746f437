use serde::{Deserialize, Serialize};

use super::RecognizerError;
use crate::pose::NUM_LANDMARKS;

/// Pose-space augmentations applied to training samples, in this order:
/// arm-joint rotation, global rotation, horizontal squeeze, perspective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationConfig {
    pub apply_probability: f64,
    pub max_arm_joint_rotate_deg: f64,
    pub arm_joint_rotate_probability: f64,
    pub max_global_rotate_deg: f64,
    pub max_squeeze_ratio: f64,
    pub max_perspective_ratio: f64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            apply_probability: 0.5,
            max_arm_joint_rotate_deg: 4.0,
            arm_joint_rotate_probability: 0.4,
            max_global_rotate_deg: 17.0,
            max_squeeze_ratio: 0.4,
            max_perspective_ratio: 0.2,
        }
    }
}

impl AugmentationConfig {
    pub fn disabled() -> Self {
        Self {
            apply_probability: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RecognizerError> {
        let prob = |v: f64| (0.0..=1.0).contains(&v);
        let ratio = |v: f64| (0.0..1.0).contains(&v);
        if !prob(self.apply_probability) || !prob(self.arm_joint_rotate_probability) {
            return Err(RecognizerError::InvalidConfig("augmentation probabilities must be in [0, 1]".into()));
        }
        if !(self.max_arm_joint_rotate_deg >= 0.0 && self.max_global_rotate_deg >= 0.0) {
            return Err(RecognizerError::InvalidConfig("rotation angles must be >= 0".into()));
        }
        if !ratio(self.max_squeeze_ratio) || !ratio(self.max_perspective_ratio) {
            return Err(RecognizerError::InvalidConfig("squeeze/perspective ratios must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Which of the 75 schema points feed the network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandmarkSubset(Vec<usize>);

impl LandmarkSubset {
    pub fn new(indices: Vec<usize>) -> Result<Self, RecognizerError> {
        if indices.is_empty() {
            return Err(RecognizerError::InvalidConfig("landmark subset is empty".into()));
        }
        let mut seen = [false; NUM_LANDMARKS];
        for &i in &indices {
            if i >= NUM_LANDMARKS {
                return Err(RecognizerError::InvalidConfig(format!("landmark index {i} outside schema")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(RecognizerError::InvalidConfig(format!("landmark index {i} listed twice")));
            }
        }
        Ok(Self(indices))
    }

    /// Head, shoulders, arms and both full hands: 12 body + 42 hand points.
    pub fn body_and_hands() -> Self {
        let mut v = vec![0, 2, 5, 7, 8, 9, 11, 12, 13, 14, 15, 16];
        v.extend(33..75);
        Self(v)
    }

    /// 18 points: upper body, fingertips of both hands and the dominant
    /// hand's index joint. Small enough for single-core training runs.
    pub fn compact() -> Self {
        Self(vec![
            0, 11, 12, 13, 14, 15, 16, // nose, shoulders, elbows, wrists
            33, 41, 45, 49, // left wrist and index/middle/ring tips
            54, 58, 60, 62, 66, 70, 74, // right wrist, thumb tip, index pip, finger tips
        ])
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for LandmarkSubset {
    fn default() -> Self {
        Self::body_and_hands()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    pub seed: u64,
    pub landmark_subset: LandmarkSubset,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            learning_rate: 1e-3,
            plateau_factor: 0.1,
            plateau_patience: 5,
            seed: 1,
            landmark_subset: LandmarkSubset::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), RecognizerError> {
        if self.epochs < 1 {
            return Err(RecognizerError::InvalidConfig("epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(RecognizerError::InvalidConfig("learning rate must be > 0".into()));
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return Err(RecognizerError::InvalidConfig("plateau factor must be in (0, 1)".into()));
        }
        if self.plateau_patience < 1 {
            return Err(RecognizerError::InvalidConfig("plateau patience must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub hidden_dim: usize,
    pub encoder_layers: usize,
    pub attention_heads: usize,
    pub max_frames: usize,
    pub feedforward_dim: usize,
}

impl ModelConfig {
    /// Defaults for a subset of `landmarks` points: hidden = 2 x landmarks,
    /// 6 encoder layers, 9 heads, 204 frames.
    pub fn for_landmarks(landmarks: usize) -> Self {
        let hidden = 2 * landmarks;
        Self {
            hidden_dim: hidden,
            encoder_layers: 6,
            attention_heads: 9,
            max_frames: 204,
            feedforward_dim: 2 * hidden,
        }
    }

    /// Pairs with [`LandmarkSubset::compact`]: hidden 36, 2 encoder layers,
    /// 9 heads, 6 frames. Trains 100 epochs on the 10-class synthetic set in
    /// about a minute on one core.
    pub fn compact() -> Self {
        Self {
            hidden_dim: 36,
            encoder_layers: 2,
            attention_heads: 9,
            max_frames: 6,
            feedforward_dim: 72,
        }
    }

    pub fn validate(&self) -> Result<(), RecognizerError> {
        if self.encoder_layers < 1 {
            return Err(RecognizerError::InvalidConfig("encoder_layers must be >= 1".into()));
        }
        if self.attention_heads < 1 || self.hidden_dim == 0 || self.hidden_dim % self.attention_heads != 0 {
            return Err(RecognizerError::InvalidConfig(format!(
                "hidden_dim {} must be a positive multiple of attention_heads {}",
                self.hidden_dim, self.attention_heads
            )));
        }
        if self.max_frames < 1 || self.feedforward_dim < 1 {
            return Err(RecognizerError::InvalidConfig("max_frames and feedforward_dim must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::for_landmarks(LandmarkSubset::default().len())
    }
}
