//! Pre-recognition submission checks.
//!
//! Errors block analysis; warnings are shown but recognition still runs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pose::{PoseSequence, FACE, LEFT_HAND, RIGHT_HAND, TORSO};

#[derive(Debug, Error, PartialEq)]
pub enum GateError {
    #[error("no people to check")]
    NoPeople,
    #[error("invalid thresholds: {0}")]
    Thresholds(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueCode {
    IncompleteUpload,
    Undecodable,
    LowResolution,
    MultiplePeople,
    OffCenter,
    HandsNotVisible,
    TorsoNotVisible,
    FaceNotVisible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

impl IssueCode {
    pub fn severity(self) -> Severity {
        match self {
            IssueCode::IncompleteUpload | IssueCode::Undecodable => Severity::Error,
            _ => Severity::Warning,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::IncompleteUpload => "incomplete_upload",
            IssueCode::Undecodable => "undecodable",
            IssueCode::LowResolution => "low_resolution",
            IssueCode::MultiplePeople => "multiple_people",
            IssueCode::OffCenter => "off_center",
            IssueCode::HandsNotVisible => "hands_not_visible",
            IssueCode::TorsoNotVisible => "torso_not_visible",
            IssueCode::FaceNotVisible => "face_not_visible",
        }
    }

    fn summary(self) -> &'static str {
        match self {
            IssueCode::IncompleteUpload => "The upload did not finish.",
            IssueCode::Undecodable => "The video could not be read.",
            IssueCode::LowResolution => "The video resolution is low, which could lead to worse results.",
            IssueCode::MultiplePeople => "More than one person is visible in the video.",
            IssueCode::OffCenter => "You are not in the horizontal center of the frame.",
            IssueCode::HandsNotVisible => "Your hands are not clearly visible.",
            IssueCode::TorsoNotVisible => "Your upper body is not clearly visible.",
            IssueCode::FaceNotVisible => "Your face is not clearly visible.",
        }
    }

    fn suggestions(self) -> &'static [&'static str] {
        match self {
            IssueCode::IncompleteUpload => &["Check your connection and submit the video again."],
            IssueCode::Undecodable => &[
                "Record the sign again with the built-in recorder.",
                "Upload a common video format such as MP4 or WebM.",
            ],
            IssueCode::LowResolution => &[
                "Use a camera setting of at least 192x144 pixels.",
                "Move closer to the camera.",
            ],
            IssueCode::MultiplePeople => &[
                "Make sure only the signer is in the frame.",
                "Trim the video to the part where only you are visible.",
            ],
            IssueCode::OffCenter => &["Move so that you are in the middle of the frame."],
            IssueCode::HandsNotVisible => &[
                "Keep both hands inside the frame while signing.",
                "Step back from the camera.",
                "Improve the lighting on your hands.",
            ],
            IssueCode::TorsoNotVisible => &["Step back so your shoulders and hips are in the frame."],
            IssueCode::FaceNotVisible => &[
                "Face the camera.",
                "Make sure your face is inside the frame and well lit.",
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub code: IssueCode,
    pub severity: Severity,
    pub summary: String,
    pub suggestions: Vec<String>,
}

impl Issue {
    pub fn new(code: IssueCode) -> Self {
        Self {
            code,
            severity: code.severity(),
            summary: code.summary().to_string(),
            suggestions: code.suggestions().iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Proceed,
    ProceedWithWarnings,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionReport {
    pub verdict: Verdict,
    pub issues: Vec<Issue>,
}

impl SubmissionReport {
    /// Message-box text: a bold summary line per issue followed by its
    /// suggestions as bullets.
    pub fn render_message(&self) -> String {
        let mut out = String::new();
        for issue in &self.issues {
            out.push_str(&format!("**{}**\n", issue.summary));
            for s in &issue.suggestions {
                out.push_str(&format!("- {s}\n"));
            }
        }
        out
    }

    pub fn has(&self, code: IssueCode) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ByteStatus {
    Complete,
    Truncated,
    Undecodable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateThresholds {
    pub min_width: u32,
    pub min_height: u32,
    /// Width of the band around the horizontal center, as a fraction of the
    /// frame width, that the torso midpoint must stay in.
    pub center_band: f64,
    pub visibility_floor: f64,
    pub min_visible_fraction: f64,
}

impl Default for GateThresholds {
    fn default() -> Self {
        Self {
            min_width: 192,
            min_height: 144,
            center_band: 0.30,
            visibility_floor: 0.5,
            min_visible_fraction: 0.6,
        }
    }
}

impl GateThresholds {
    pub fn validate(&self) -> Result<(), GateError> {
        if self.min_width == 0 || self.min_height == 0 {
            return Err(GateError::Thresholds("minimum resolution must be positive".into()));
        }
        if !(self.center_band > 0.0 && self.center_band <= 1.0) {
            return Err(GateError::Thresholds("center_band must be in (0, 1]".into()));
        }
        if !(self.visibility_floor > 0.0 && self.min_visible_fraction > 0.0) {
            return Err(GateError::Thresholds("visibility thresholds must be positive".into()));
        }
        Ok(())
    }
}

pub fn check_technical(resolution: (u32, u32), status: ByteStatus, t: &GateThresholds) -> Vec<Issue> {
    match status {
        ByteStatus::Truncated => vec![Issue::new(IssueCode::IncompleteUpload)],
        ByteStatus::Undecodable => vec![Issue::new(IssueCode::Undecodable)],
        ByteStatus::Complete if resolution.0 < t.min_width || resolution.1 < t.min_height => {
            vec![Issue::new(IssueCode::LowResolution)]
        }
        ByteStatus::Complete => Vec::new(),
    }
}

fn visible_fraction(seq: &PoseSequence, points: impl Iterator<Item = usize> + Clone, floor: f64) -> f64 {
    let (mut visible, mut total) = (0usize, 0usize);
    for frame in seq.frames() {
        for i in points.clone() {
            total += 1;
            if frame[i].visibility as f64 >= floor {
                visible += 1;
            }
        }
    }
    visible as f64 / total.max(1) as f64
}

/// More than one track yields only `multiple_people`; otherwise the single
/// person is checked for centering and region visibility, averaged over
/// frames.
pub fn check_visibility(people: &[PoseSequence], t: &GateThresholds) -> Result<Vec<Issue>, GateError> {
    let person = match people {
        [] => return Err(GateError::NoPeople),
        [one] => one,
        _ => return Ok(vec![Issue::new(IssueCode::MultiplePeople)]),
    };
    let mut issues = Vec::new();
    let mid_x = person
        .frames()
        .iter()
        .map(|f| TORSO.iter().map(|&i| f[i].x as f64).sum::<f64>() / TORSO.len() as f64)
        .sum::<f64>()
        / person.len() as f64;
    if (mid_x - 0.5).abs() > t.center_band / 2.0 {
        issues.push(Issue::new(IssueCode::OffCenter));
    }
    let regions: [(IssueCode, Vec<usize>); 3] = [
        (IssueCode::HandsNotVisible, LEFT_HAND.chain(RIGHT_HAND).collect()),
        (IssueCode::TorsoNotVisible, TORSO.to_vec()),
        (IssueCode::FaceNotVisible, FACE.collect()),
    ];
    for (code, points) in regions {
        if visible_fraction(person, points.iter().copied(), t.visibility_floor) < t.min_visible_fraction {
            issues.push(Issue::new(code));
        }
    }
    Ok(issues)
}

pub fn gate(technical: Vec<Issue>, visibility: Vec<Issue>) -> SubmissionReport {
    let issues: Vec<Issue> = technical.into_iter().chain(visibility).collect();
    let verdict = if issues.iter().any(|i| i.severity == Severity::Error) {
        Verdict::Reject
    } else if issues.is_empty() {
        Verdict::Proceed
    } else {
        Verdict::ProceedWithWarnings
    };
    SubmissionReport { verdict, issues }
}
