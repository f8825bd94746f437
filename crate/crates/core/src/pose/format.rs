//! Text pose file.
//!
//! ```text
//! POSE v1 fps=30 w=640 h=480 n=75
//! x0 y0 v0 x1 y1 v1 ... x74 y74 v74     <- one line per frame, 6 decimals
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{Landmark, PoseError, PoseFrame, PoseSequence, NUM_LANDMARKS};

const MAGIC: &str = "POSE";
const VERSION: &str = "v1";

fn header_field<'a>(tok: Option<&'a str>, key: &str) -> Result<&'a str, PoseError> {
    let tok = tok.ok_or_else(|| PoseError::Header(format!("missing `{key}=`")))?;
    tok.strip_prefix(key)
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| PoseError::Header(format!("expected `{key}=...`, found `{tok}`")))
}

fn parse_header(line: &str) -> Result<(f64, u32, u32), PoseError> {
    let mut toks = line.split_whitespace();
    if toks.next() != Some(MAGIC) {
        return Err(PoseError::Header(format!("expected `{MAGIC}` magic")));
    }
    match toks.next() {
        Some(VERSION) => {}
        Some(v) => return Err(PoseError::Header(format!("unsupported version `{v}`"))),
        None => return Err(PoseError::Header("missing version".into())),
    }
    let bad = |k: &str, v: &str| PoseError::Header(format!("bad {k} value `{v}`"));
    let fps_s = header_field(toks.next(), "fps")?;
    let fps: f64 = fps_s.parse().map_err(|_| bad("fps", fps_s))?;
    let w_s = header_field(toks.next(), "w")?;
    let w: u32 = w_s.parse().map_err(|_| bad("w", w_s))?;
    let h_s = header_field(toks.next(), "h")?;
    let h: u32 = h_s.parse().map_err(|_| bad("h", h_s))?;
    let n_s = header_field(toks.next(), "n")?;
    let n: usize = n_s.parse().map_err(|_| bad("n", n_s))?;
    if n != NUM_LANDMARKS {
        return Err(PoseError::Header(format!("n must be {NUM_LANDMARKS}, got {n}")));
    }
    if toks.next().is_some() {
        return Err(PoseError::Header("trailing tokens".into()));
    }
    Ok((fps, w, h))
}

/// All tracks in a pose file. A file holds one track per person, each
/// introduced by its own header line.
pub fn parse_pose_tracks(text: &str) -> Result<Vec<PoseSequence>, PoseError> {
    let mut tracks = Vec::new();
    let mut block: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.starts_with(MAGIC) && !block.is_empty() {
            tracks.push(parse_track(&block)?);
            block.clear();
        }
        block.push(line);
    }
    if block.is_empty() {
        return Err(PoseError::Header("empty file".into()));
    }
    tracks.push(parse_track(&block)?);
    Ok(tracks)
}

/// The first (primary) track of a pose file.
pub fn parse_pose_str(text: &str) -> Result<PoseSequence, PoseError> {
    Ok(parse_pose_tracks(text)?.swap_remove(0))
}

fn parse_track(lines: &[&str]) -> Result<PoseSequence, PoseError> {
    let (header, body) = lines.split_first().ok_or_else(|| PoseError::Header("empty file".into()))?;
    let (fps, w, h) = parse_header(header.trim_end())?;
    let mut frames = Vec::new();
    for (f, line) in body.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f32>().map_err(|_| PoseError::Frame {
                    frame: f,
                    msg: format!("not a number: `{t}`"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() % 3 != 0 || values.len() / 3 != NUM_LANDMARKS {
            return Err(PoseError::LandmarkCount {
                frame: f,
                expected: NUM_LANDMARKS,
                found: values.len() / 3,
            });
        }
        let lms = values
            .chunks_exact(3)
            .map(|c| Landmark::new(c[0], c[1], c[2]))
            .collect();
        let frame = PoseFrame::new(lms).map_err(|e| match e {
            PoseError::OutOfRange { landmark, value, .. } => PoseError::OutOfRange { frame: f, landmark, value },
            other => other,
        })?;
        frames.push(frame);
    }
    PoseSequence::new(frames, fps, (w, h))
}

pub fn parse_pose_file(path: impl AsRef<Path>) -> Result<PoseSequence, PoseError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| PoseError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_pose_str(&text)
}

pub fn write_pose_string(seq: &PoseSequence) -> String {
    let (w, h) = seq.source_resolution();
    let mut out = String::with_capacity(32 + seq.len() * NUM_LANDMARKS * 27);
    let _ = writeln!(out, "{MAGIC} {VERSION} fps={} w={w} h={h} n={NUM_LANDMARKS}", seq.fps());
    for frame in seq.frames() {
        for (i, lm) in frame.landmarks().iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:.6} {:.6} {:.6}", lm.x, lm.y, lm.visibility);
        }
        out.push('\n');
    }
    out
}

pub fn write_pose_tracks(tracks: &[PoseSequence]) -> String {
    tracks.iter().map(write_pose_string).collect()
}

pub fn write_pose_file(seq: &PoseSequence, path: impl AsRef<Path>) -> Result<(), PoseError> {
    std::fs::write(path.as_ref(), write_pose_string(seq))
        .map_err(|e| PoseError::Io(format!("{}: {e}", path.as_ref().display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::synth::{synthesize_dataset, SynthConfig};
    use crate::pose::test_util::still_person;

    #[test]
    fn two_frame_file() {
        let text = write_pose_string(&still_person(2));
        assert!(text.starts_with("POSE v1 fps=30 w=640 h=480 n=75\n"));
        let seq = parse_pose_str(&text).unwrap();
        assert_eq!(seq.len(), 2);
        assert!((seq.duration_s() - 0.0667).abs() < 1e-4);
    }

    #[test]
    fn short_frame_names_index() {
        let mut text = write_pose_string(&still_person(3));
        // drop the last landmark of the second frame
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let toks: Vec<&str> = lines[2].split(' ').collect();
        lines[2] = toks[..toks.len() - 3].join(" ");
        text = lines.join("\n");
        assert_eq!(
            parse_pose_str(&text).unwrap_err(),
            PoseError::LandmarkCount { frame: 1, expected: 75, found: 74 }
        );
    }

    #[test]
    fn header_errors() {
        assert!(matches!(parse_pose_str("POSE v2 fps=30 w=1 h=1 n=75\n"), Err(PoseError::Header(_))));
        assert!(matches!(parse_pose_str("POSE v1 fps=30 w=1 h=1 n=74\n"), Err(PoseError::Header(_))));
        assert!(matches!(parse_pose_str("HELLO\n"), Err(PoseError::Header(_))));
        assert!(matches!(parse_pose_str(""), Err(PoseError::Header(_))));
        assert!(matches!(parse_pose_str("POSE v1 fps=x w=1 h=1 n=75\n"), Err(PoseError::Header(_))));
    }

    #[test]
    fn out_of_range_names_frame() {
        let text = write_pose_string(&still_person(2));
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let mut toks: Vec<String> = lines[2].split(' ').map(str::to_string).collect();
        toks[3] = "1.250000".into();
        lines[2] = toks.join(" ");
        match parse_pose_str(&lines.join("\n")) {
            Err(PoseError::OutOfRange { frame: 1, landmark: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn multiple_tracks() {
        let text = write_pose_tracks(&[still_person(2), still_person(3)]);
        let tracks = parse_pose_tracks(&text).unwrap();
        assert_eq!(tracks.len(), 2);
        assert_eq!(tracks[1].len(), 3);
        assert_eq!(parse_pose_str(&text).unwrap().len(), 2);
    }

    #[test]
    fn second_write_is_byte_identical() {
        let cfg = SynthConfig { num_classes: 2, per_class: 1, frames: 90, noise_sigma: 0.02, seed: 3 };
        let seq = synthesize_dataset(&cfg).unwrap().remove(0).sequence;
        let first = write_pose_string(&seq);
        let second = write_pose_string(&parse_pose_str(&first).unwrap());
        assert_eq!(first, second);
    }
}
