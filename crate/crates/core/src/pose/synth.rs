//! Desk-scale synthetic signers.
//!
//! Each class is a smooth template: the dominant (right) hand starts at a
//! location anchor and follows a movement pattern in a class-specific
//! direction, optionally mirrored by the left hand. Classes come in pairs that
//! share everything except a fine finger configuration, which is the detail
//! that low capture resolutions wipe out.
//!
//! Noise is white in time: every frame, the body, the left hand and the right
//! hand each receive an independent rigid displacement drawn from
//! `N(0, noise_sigma^2)` per axis. Coordinates are clamped to the unit square
//! and stored on the 1e-6 grid of the pose file format.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{body, Landmark, PoseError, PoseFrame, PoseSequence, LEFT_HAND, NUM_LANDMARKS, RIGHT_HAND};
use crate::catalog::{GlossEntry, Hands, Location, Movement, SignMetadata, VocabularyCatalog};

pub const SYNTH_FPS: f64 = 30.0;
pub const DEFAULT_FRAMES: usize = 60;
pub const DEFAULT_NOISE: f64 = 0.02;

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;
const AMPLITUDE: f64 = 0.07;
const FINGER_LEN: f64 = 0.036;
/// Fraction of finger length lost when a finger is curled.
const CURL: f64 = 0.17;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub per_class: usize,
    pub frames: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_classes: 10,
            per_class: 250,
            frames: DEFAULT_FRAMES,
            noise_sigma: DEFAULT_NOISE,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    pub class: usize,
    pub sequence: PoseSequence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Template {
    movement: Movement,
    hands: Hands,
    location: Location,
    direction: f64,
    /// 0: index+middle extended, ring+pinky curled. 1: the reverse.
    variant: usize,
}

fn template(class: usize) -> Template {
    let base = class / 2;
    const MOVES: [Movement; 5] = [
        Movement::Unidirectional,
        Movement::Bidirectional,
        Movement::Circular,
        Movement::Repeated,
        Movement::None,
    ];
    const LOCS: [Location; 4] = [Location::Torso, Location::Neck, Location::Face, Location::InSpace];
    Template {
        movement: MOVES[base % 5],
        hands: if base % 2 == 0 { Hands::One } else { Hands::Two },
        location: LOCS[base % 4],
        direction: base as f64 * GOLDEN_ANGLE,
        variant: class % 2,
    }
}

pub fn template_metadata(class: usize) -> SignMetadata {
    let t = template(class);
    let hs = if t.variant == 0 { "V" } else { "bent-V" };
    SignMetadata::new(t.movement, t.hands, t.location, Some(hs))
}

/// Catalog whose class `i` is synthetic template `i`.
pub fn synthetic_catalog(num_classes: usize) -> VocabularyCatalog {
    let entries = (0..num_classes)
        .map(|c| GlossEntry {
            rendition_id: format!("syn-{c:03}"),
            gloss: format!("SIGN{c:03}"),
            metadata: template_metadata(c),
            example_media: format!("synthetic/class{c:03}.pose"),
        })
        .collect();
    VocabularyCatalog::new(entries).expect("synthetic ids are unique")
}

fn anchor(loc: Location) -> (f64, f64) {
    match loc {
        Location::Torso => (0.44, 0.60),
        Location::Neck => (0.46, 0.46),
        Location::Face => (0.46, 0.36),
        Location::InSpace => (0.30, 0.52),
    }
}

fn displacement(t: &Template, time: f64) -> (f64, f64) {
    let (dx, dy) = (t.direction.cos(), t.direction.sin());
    let s = match t.movement {
        Movement::Unidirectional => time * time * (3.0 - 2.0 * time),
        Movement::Bidirectional => (PI * time).sin(),
        Movement::Repeated => 0.5 * (1.0 - (4.0 * PI * time).cos()),
        Movement::None => 0.0,
        Movement::Circular => {
            let a = 2.0 * PI * time + t.direction;
            return (
                AMPLITUDE * (a.cos() - t.direction.cos()),
                AMPLITUDE * (a.sin() - t.direction.sin()),
            );
        }
    };
    (AMPLITUDE * s * dx, AMPLITUDE * s * dy)
}

type Point = (f64, f64);

/// 21 hand points around `wrist`; `side` is +1 when the thumb points to +x.
/// `extended[f]` is per finger (index, middle, ring, pinky).
fn hand_points(wrist: Point, side: f64, extended: [bool; 4]) -> [Point; 21] {
    let (wx, wy) = wrist;
    let mut pts = [(0.0, 0.0); 21];
    pts[0] = wrist;
    for k in 1..=4 {
        let k = k as f64;
        pts[k as usize] = (wx + side * (0.010 + 0.008 * k), wy - 0.008 - 0.006 * k);
    }
    let mcp = [
        (wx + side * 0.015, wy - 0.040),
        (wx + side * 0.005, wy - 0.042),
        (wx - side * 0.005, wy - 0.040),
        (wx - side * 0.015, wy - 0.035),
    ];
    for (f, &(mx, my)) in mcp.iter().enumerate() {
        let base = 5 + 4 * f;
        pts[base] = (mx, my);
        let reach = if extended[f] { 1.0 } else { 1.0 - CURL };
        for j in 1..=3 {
            pts[base + j] = (mx, my - FINGER_LEN * reach * j as f64 / 3.0);
        }
    }
    pts
}

fn elbow(shoulder: Point, wrist: Point, outward: f64) -> Point {
    (
        (shoulder.0 + wrist.0) / 2.0 + outward * 0.06,
        (shoulder.1 + wrist.1) / 2.0 + 0.06,
    )
}

/// Static body points and default visibilities.
fn body_base() -> Vec<(Point, f32)> {
    let mut pts = vec![((0.5, 1.0), 0.05f32); NUM_LANDMARKS];
    let face = [
        (0.500, 0.280),
        (0.510, 0.260),
        (0.520, 0.260),
        (0.530, 0.260),
        (0.490, 0.260),
        (0.480, 0.260),
        (0.470, 0.260),
        (0.545, 0.270),
        (0.455, 0.270),
        (0.510, 0.310),
        (0.490, 0.310),
    ];
    for (i, p) in face.into_iter().enumerate() {
        pts[i] = (p, 1.0);
    }
    pts[body::LEFT_SHOULDER] = ((0.58, 0.42), 1.0);
    pts[body::RIGHT_SHOULDER] = ((0.42, 0.42), 1.0);
    pts[body::LEFT_HIP] = ((0.55, 0.78), 1.0);
    pts[body::RIGHT_HIP] = ((0.45, 0.78), 1.0);
    pts[25] = ((0.55, 0.98), 0.3);
    pts[26] = ((0.45, 0.98), 0.3);
    for (i, x) in (27..33).zip([0.55, 0.45, 0.55, 0.45, 0.55, 0.45]) {
        pts[i] = ((x, 1.0), 0.05);
    }
    pts
}

const LEFT_REST: Point = (0.62, 0.76);
const RIGHT_REST: Point = (0.38, 0.76);

fn place_arm(pts: &mut [(Point, f32)], left: bool, wrist: Point, extended: [bool; 4]) {
    let (shoulder_i, elbow_i, wrist_i, hand_pts, range, side, outward) = if left {
        (body::LEFT_SHOULDER, body::LEFT_ELBOW, body::LEFT_WRIST, body::LEFT_HAND_POINTS, LEFT_HAND, -1.0, 1.0)
    } else {
        (body::RIGHT_SHOULDER, body::RIGHT_ELBOW, body::RIGHT_WRIST, body::RIGHT_HAND_POINTS, RIGHT_HAND, 1.0, -1.0)
    };
    let shoulder = pts[shoulder_i].0;
    pts[elbow_i] = (elbow(shoulder, wrist, outward), 1.0);
    pts[wrist_i] = (wrist, 1.0);
    let hand = hand_points(wrist, side, extended);
    for (j, p) in hand.iter().enumerate() {
        pts[range.start + j] = (*p, 1.0);
    }
    // body-model pinky, index, thumb
    pts[hand_pts[0]] = (hand[17], 1.0);
    pts[hand_pts[1]] = (hand[5], 1.0);
    pts[hand_pts[2]] = (hand[4], 1.0);
}

fn to_frame(pts: &[(Point, f32)]) -> PoseFrame {
    let lms = pts
        .iter()
        .map(|&((x, y), v)| Landmark::new(on_grid(x), on_grid(y), v))
        .collect();
    PoseFrame::new(lms).expect("synthetic landmarks are clamped")
}

fn on_grid(v: f64) -> f32 {
    ((v.clamp(0.0, 1.0) * 1e6).round() / 1e6) as f32
}

/// A standing signer with both hands at rest.
pub fn neutral_pose() -> PoseFrame {
    let mut pts = body_base();
    place_arm(&mut pts, true, LEFT_REST, [true; 4]);
    place_arm(&mut pts, false, RIGHT_REST, [true; 4]);
    to_frame(&pts)
}

fn template_points(t: &Template, time: f64) -> Vec<(Point, f32)> {
    let mut pts = body_base();
    let (ax, ay) = anchor(t.location);
    let (dx, dy) = displacement(t, time);
    let right = (ax + dx, ay + dy);
    let shape = if t.variant == 0 {
        [true, true, false, false]
    } else {
        [false, false, true, true]
    };
    place_arm(&mut pts, false, right, shape);
    match t.hands {
        Hands::Two => place_arm(&mut pts, true, (1.0 - right.0, right.1), [true; 4]),
        Hands::One => place_arm(&mut pts, true, LEFT_REST, [true; 4]),
    }
    pts
}

fn frame_time(f: usize, frames: usize) -> f64 {
    if frames <= 1 {
        0.0
    } else {
        f as f64 / (frames - 1) as f64
    }
}

/// The noise-free sequence for `class`.
pub fn class_template(class: usize, frames: usize) -> Result<PoseSequence, PoseError> {
    synthesize_sample(class, 0, frames, 0.0, 0)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn sample_seed(seed: u64, class: usize, index: usize) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ class as u64) ^ index as u64)
}

fn is_left_group(i: usize) -> bool {
    LEFT_HAND.contains(&i) || i == body::LEFT_WRIST || body::LEFT_HAND_POINTS.contains(&i)
}

fn is_right_group(i: usize) -> bool {
    RIGHT_HAND.contains(&i) || i == body::RIGHT_WRIST || body::RIGHT_HAND_POINTS.contains(&i)
}

/// Sample `index` of `class`. `synthesize_dataset` with the same seed,
/// frame count and noise produces exactly this sequence at that position.
pub fn synthesize_sample(
    class: usize,
    index: usize,
    frames: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<PoseSequence, PoseError> {
    if frames == 0 {
        return Err(PoseError::Invalid("frames must be >= 1".into()));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(PoseError::Invalid(format!("noise_sigma must be >= 0, got {noise_sigma}")));
    }
    let t = template(class);
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(seed, class, index));
    let normal = Normal::new(0.0, noise_sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");
    let mut out = Vec::with_capacity(frames);
    for f in 0..frames {
        let mut pts = template_points(&t, frame_time(f, frames));
        if noise_sigma > 0.0 {
            let mut draw = || (normal.sample(&mut rng), normal.sample(&mut rng));
            let (body_n, left_n, right_n) = (draw(), draw(), draw());
            for (i, (p, _)) in pts.iter_mut().enumerate() {
                let n = if is_left_group(i) {
                    left_n
                } else if is_right_group(i) {
                    right_n
                } else {
                    body_n
                };
                p.0 += n.0;
                p.1 += n.1;
            }
        }
        out.push(to_frame(&pts));
    }
    PoseSequence::new(out, SYNTH_FPS, (640, 480))
}

/// Class-major: all samples of class 0, then class 1, and so on.
pub fn synthesize_dataset(cfg: &SynthConfig) -> Result<Vec<LabeledSequence>, PoseError> {
    synthesize_split(cfg, 0)
}

/// Like [`synthesize_dataset`] but with sample indices starting at
/// `first_index`, so a held-out split never repeats a training sample.
pub fn synthesize_split(cfg: &SynthConfig, first_index: usize) -> Result<Vec<LabeledSequence>, PoseError> {
    if cfg.num_classes == 0 || cfg.per_class == 0 {
        return Err(PoseError::Invalid("class and sample counts must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(cfg.num_classes * cfg.per_class);
    for class in 0..cfg.num_classes {
        for index in first_index..first_index + cfg.per_class {
            out.push(LabeledSequence {
                class,
                sequence: synthesize_sample(class, index, cfg.frames, cfg.noise_sigma, cfg.seed)?,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::write_pose_string;

    fn sq_dist(a: &PoseSequence, b: &PoseSequence) -> f64 {
        a.frames()
            .iter()
            .zip(b.frames())
            .flat_map(|(fa, fb)| fa.landmarks().iter().zip(fb.landmarks()))
            .map(|(p, q)| {
                let dx = (p.x - q.x) as f64;
                let dy = (p.y - q.y) as f64;
                dx * dx + dy * dy
            })
            .sum()
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SynthConfig { num_classes: 10, per_class: 1, frames: 30, noise_sigma: 0.02, seed: 7 };
        let a: Vec<String> = synthesize_dataset(&cfg).unwrap().iter().map(|s| write_pose_string(&s.sequence)).collect();
        let b: Vec<String> = synthesize_dataset(&cfg).unwrap().iter().map(|s| write_pose_string(&s.sequence)).collect();
        assert_eq!(a, b);
        let other = SynthConfig { seed: 8, ..cfg };
        assert_ne!(write_pose_string(&synthesize_dataset(&other).unwrap()[0].sequence), a[0]);
    }

    #[test]
    fn zero_noise_equals_template() {
        let cfg = SynthConfig { num_classes: 4, per_class: 3, frames: 20, noise_sigma: 0.0, seed: 5 };
        for s in synthesize_dataset(&cfg).unwrap() {
            assert_eq!(s.sequence, class_template(s.class, 20).unwrap());
        }
    }

    #[test]
    fn sample_matches_dataset_position() {
        let cfg = SynthConfig { num_classes: 5, per_class: 2, frames: 12, noise_sigma: 0.02, seed: 9 };
        let ds = synthesize_dataset(&cfg).unwrap();
        assert_eq!(ds[3 * 2].sequence, synthesize_sample(3, 0, 12, 0.02, 9).unwrap());
        assert_eq!(ds[3 * 2 + 1].sequence, synthesize_sample(3, 1, 12, 0.02, 9).unwrap());
    }

    #[test]
    fn variant_pairs_differ_only_in_fingers() {
        let a = class_template(2, 10).unwrap();
        let b = class_template(3, 10).unwrap();
        for (fa, fb) in a.frames().iter().zip(b.frames()) {
            for i in 0..NUM_LANDMARKS {
                let finger = (RIGHT_HAND.start + 5..RIGHT_HAND.end).contains(&i)
                    && !matches!(i - RIGHT_HAND.start, 5 | 9 | 13 | 17);
                if !finger {
                    assert_eq!(fa[i], fb[i], "landmark {i}");
                }
            }
        }
        // finger offsets between the two variants sum to zero, so rigid hand
        // noise cannot favour either template
        let (fa, fb) = (&a.frames()[0], &b.frames()[0]);
        let (sx, sy) = RIGHT_HAND.fold((0.0f64, 0.0f64), |(sx, sy), i| {
            (sx + (fa[i].x - fb[i].x) as f64, sy + (fa[i].y - fb[i].y) as f64)
        });
        assert!(sx.abs() < 1e-5 && sy.abs() < 1e-5, "{sx} {sy}");
    }

    #[test]
    fn templates_are_pairwise_distinct() {
        let ts: Vec<_> = (0..10).map(|c| class_template(c, 60).unwrap()).collect();
        for i in 0..10 {
            for j in i + 1..10 {
                assert!(sq_dist(&ts[i], &ts[j]) > 0.01, "{i} vs {j}");
            }
        }
    }

    #[test]
    fn metadata_matches_catalog() {
        let cat = synthetic_catalog(10);
        assert_eq!(cat.len(), 10);
        assert_eq!(cat.entry(3).unwrap().metadata, template_metadata(3));
        assert_eq!(template_metadata(0).hands, Hands::One);
        assert_eq!(template_metadata(2).hands, Hands::Two);
    }
}
