//! Pose-sequence classifier: a transformer encoder over normalized frames
//! followed by one decoder block whose single learned query reads out the
//! class.

mod augment;
mod config;
mod io;
mod model;
mod nn;
mod normalize;
mod train;

pub use augment::augment;
pub use config::{AugmentationConfig, LandmarkSubset, ModelConfig, TrainConfig};
pub use io::{load_model, model_from_bytes, model_to_bytes, save_model, MODEL_FORMAT_VERSION};
pub use model::{gradient_check, Distribution, GradientCheck, TrainedModel};
pub use normalize::{normalize, NormalizedSequence};
pub use train::{train, train_with_observer, EpochStats};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecognizerError {
    #[error("degenerate pose: torso not visible or of zero extent")]
    DegeneratePose,
    #[error("model was trained for catalog {model}, active catalog is {catalog}")]
    FingerprintMismatch { model: String, catalog: String },
    #[error("sample {index}: label {label} outside catalog of {classes} classes")]
    LabelOutOfRange { index: usize, label: usize, classes: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported model format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
