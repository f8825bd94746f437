//! Labeled pose datasets on disk.
//!
//! A dataset directory is either
//! - one subdirectory per rendition id holding `*.pose` files, or
//! - a `synthetic.json` manifest that regenerates a synthetic split.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::format::{parse_pose_file, write_pose_file};
use super::synth::{synthesize_split, LabeledSequence, SynthConfig};
use super::PoseError;
use crate::catalog::VocabularyCatalog;

pub const MANIFEST_FILE: &str = "synthetic.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticManifest {
    pub num_classes: usize,
    pub per_class: usize,
    pub frames: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Sample index of each class's first sample; a test split starts where
    /// the training split ends.
    pub first_index: usize,
}

impl SyntheticManifest {
    pub fn new(cfg: &SynthConfig, first_index: usize) -> Self {
        Self {
            num_classes: cfg.num_classes,
            per_class: cfg.per_class,
            frames: cfg.frames,
            noise_sigma: cfg.noise_sigma,
            seed: cfg.seed,
            first_index,
        }
    }

    pub fn config(&self) -> SynthConfig {
        SynthConfig {
            num_classes: self.num_classes,
            per_class: self.per_class,
            frames: self.frames,
            noise_sigma: self.noise_sigma,
            seed: self.seed,
        }
    }

    pub fn expand(&self) -> Result<Vec<LabeledSequence>, PoseError> {
        synthesize_split(&self.config(), self.first_index)
    }
}

fn io(path: &Path, e: impl std::fmt::Display) -> PoseError {
    PoseError::Io(format!("{}: {e}", path.display()))
}

pub fn write_manifest(dir: impl AsRef<Path>, manifest: &SyntheticManifest) -> Result<(), PoseError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(manifest).map_err(|e| io(&path, e))?;
    std::fs::write(&path, json + "\n").map_err(|e| io(&path, e))
}

/// Writes `<dir>/<rendition_id>/<nnnnn>.pose`, numbering each class from 0.
pub fn write_dataset(
    dir: impl AsRef<Path>,
    samples: &[LabeledSequence],
    catalog: &VocabularyCatalog,
) -> Result<(), PoseError> {
    let dir = dir.as_ref();
    let mut counts = vec![0usize; catalog.len()];
    for s in samples {
        let id = catalog
            .rendition_of(s.class)
            .ok_or_else(|| PoseError::Invalid(format!("class {} outside catalog", s.class)))?;
        let class_dir = dir.join(id);
        std::fs::create_dir_all(&class_dir).map_err(|e| io(&class_dir, e))?;
        write_pose_file(&s.sequence, class_dir.join(format!("{:05}.pose", counts[s.class])))?;
        counts[s.class] += 1;
    }
    Ok(())
}

/// Samples ordered by class index, then file name.
pub fn load_dataset(dir: impl AsRef<Path>, catalog: &VocabularyCatalog) -> Result<Vec<LabeledSequence>, PoseError> {
    let dir = dir.as_ref();
    let manifest = dir.join(MANIFEST_FILE);
    if manifest.is_file() {
        let text = std::fs::read_to_string(&manifest).map_err(|e| io(&manifest, e))?;
        let m: SyntheticManifest = serde_json::from_str(&text).map_err(|e| io(&manifest, e))?;
        if m.num_classes > catalog.len() {
            return Err(PoseError::Invalid(format!(
                "manifest has {} classes, catalog only {}",
                m.num_classes,
                catalog.len()
            )));
        }
        return m.expand();
    }
    let mut by_class: Vec<Vec<std::path::PathBuf>> = vec![Vec::new(); catalog.len()];
    for entry in std::fs::read_dir(dir).map_err(|e| io(dir, e))? {
        let path = entry.map_err(|e| io(dir, e))?.path();
        if !path.is_dir() {
            continue;
        }
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let class = catalog
            .class_of(name)
            .ok_or_else(|| PoseError::Invalid(format!("directory `{name}` is not a rendition id in the catalog")))?;
        for f in std::fs::read_dir(&path).map_err(|e| io(&path, e))? {
            let f = f.map_err(|e| io(&path, e))?.path();
            if f.extension().is_some_and(|e| e == "pose") {
                by_class[class].push(f);
            }
        }
    }
    let mut out = Vec::new();
    for (class, mut files) in by_class.into_iter().enumerate() {
        files.sort();
        for f in files {
            out.push(LabeledSequence { class, sequence: parse_pose_file(&f)? });
        }
    }
    if out.is_empty() {
        return Err(PoseError::Invalid(format!("no pose files under {}", dir.display())));
    }
    Ok(out)
}
