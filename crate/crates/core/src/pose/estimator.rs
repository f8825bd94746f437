//! Boundary to the pose estimator that turns submitted media into landmark
//! tracks. The real video estimator lives outside this crate; the two
//! implementations here read pose files or generate synthetic signers.

use super::format::parse_pose_tracks;
use super::synth::{neutral_pose, synthesize_sample, DEFAULT_FRAMES, DEFAULT_NOISE, SYNTH_FPS};
use super::{Landmark, PoseError, PoseFrame, PoseSequence};

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorCapability {
    pub max_resolution: (u32, u32),
    pub containers: Vec<String>,
}

/// Implementations must be deterministic for identical input bytes.
pub trait PoseEstimator: Send + Sync {
    fn capability(&self) -> EstimatorCapability;

    /// One track per detected person, primary signer first. Never empty on
    /// success.
    fn estimate_people(&self, media: &[u8]) -> Result<Vec<PoseSequence>, PoseError>;

    /// Whether undecodable bytes look like a cut-off upload rather than a
    /// foreign format. Only consulted after `estimate_people` failed.
    fn is_truncated(&self, _media: &[u8]) -> bool {
        false
    }
}

/// The primary signer's track.
pub fn estimate(estimator: &dyn PoseEstimator, media: &[u8]) -> Result<PoseSequence, PoseError> {
    let mut people = estimator.estimate_people(media)?;
    if people.is_empty() {
        return Err(PoseError::Estimator("no person detected".into()));
    }
    Ok(people.swap_remove(0))
}

/// Media bytes are the text of a pose file.
#[derive(Debug, Clone, Copy, Default)]
pub struct FileBackedEstimator;

impl PoseEstimator for FileBackedEstimator {
    fn capability(&self) -> EstimatorCapability {
        EstimatorCapability {
            max_resolution: (u32::MAX, u32::MAX),
            containers: vec!["pose".into()],
        }
    }

    fn estimate_people(&self, media: &[u8]) -> Result<Vec<PoseSequence>, PoseError> {
        let text = std::str::from_utf8(media).map_err(|e| PoseError::Undecodable(e.to_string()))?;
        parse_pose_tracks(text).map_err(|e| PoseError::Undecodable(e.to_string()))
    }

    /// A pose file that starts like one but ends mid-line, or whose last
    /// frame is short.
    fn is_truncated(&self, media: &[u8]) -> bool {
        let Ok(text) = std::str::from_utf8(media) else {
            // a cut inside a multi-byte character
            return std::str::from_utf8(&media[..media.len().saturating_sub(3)]).is_ok_and(|t| t.starts_with("POSE"));
        };
        if !text.starts_with("POSE") {
            return false;
        }
        if !text.ends_with('\n') {
            return true;
        }
        let frames = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with("POSE")).count();
        matches!(parse_pose_tracks(text), Err(PoseError::LandmarkCount { frame, .. }) if frame + 1 == frames)
    }
}

/// Media bytes are a generator spec such as `class=3,seed=9`. Optional keys:
/// `index`, `frames`, `noise`, `people` (extra people are bystanders).
#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticEstimator;

#[derive(Debug, Clone, PartialEq)]
struct SynthSpec {
    class: usize,
    seed: u64,
    index: usize,
    frames: usize,
    noise: f64,
    people: usize,
}

fn parse_spec(text: &str) -> Result<SynthSpec, PoseError> {
    let mut spec = SynthSpec {
        class: usize::MAX,
        seed: u64::MAX,
        index: 0,
        frames: DEFAULT_FRAMES,
        noise: DEFAULT_NOISE,
        people: 1,
    };
    let bad = |kv: &str| PoseError::Undecodable(format!("bad synthetic spec entry `{kv}`"));
    for kv in text.trim().split(',').filter(|s| !s.is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad(kv))?;
        let (k, v) = (k.trim(), v.trim());
        match k {
            "class" => spec.class = v.parse().map_err(|_| bad(kv))?,
            "seed" => spec.seed = v.parse().map_err(|_| bad(kv))?,
            "index" => spec.index = v.parse().map_err(|_| bad(kv))?,
            "frames" => spec.frames = v.parse().map_err(|_| bad(kv))?,
            "noise" => spec.noise = v.parse().map_err(|_| bad(kv))?,
            "people" => spec.people = v.parse().map_err(|_| bad(kv))?,
            _ => return Err(bad(kv)),
        }
    }
    if spec.class == usize::MAX || spec.seed == u64::MAX {
        return Err(PoseError::Undecodable("synthetic spec needs `class` and `seed`".into()));
    }
    if spec.people == 0 {
        return Err(PoseError::Undecodable("people must be >= 1".into()));
    }
    Ok(spec)
}

/// A neutral person standing at the right edge of the frame.
fn bystander(frames: usize) -> PoseSequence {
    let shifted: Vec<Landmark> = neutral_pose()
        .landmarks()
        .iter()
        .map(|lm| Landmark::new((lm.x + 0.35).min(1.0), lm.y, lm.visibility))
        .collect();
    let frame = PoseFrame::new(shifted).expect("clamped");
    PoseSequence::new(vec![frame; frames], SYNTH_FPS, (640, 480)).expect("non-empty")
}

impl PoseEstimator for SyntheticEstimator {
    fn capability(&self) -> EstimatorCapability {
        EstimatorCapability {
            max_resolution: (640, 480),
            containers: vec!["synthetic".into()],
        }
    }

    fn estimate_people(&self, media: &[u8]) -> Result<Vec<PoseSequence>, PoseError> {
        let text = std::str::from_utf8(media).map_err(|e| PoseError::Undecodable(e.to_string()))?;
        let spec = parse_spec(text)?;
        let signer = synthesize_sample(spec.class, spec.index, spec.frames, spec.noise, spec.seed)
            .map_err(|e| PoseError::Estimator(e.to_string()))?;
        let mut people = vec![signer];
        people.extend((1..spec.people).map(|_| bystander(spec.frames)));
        Ok(people)
    }
}
