use rand::Rng;

use super::config::AugmentationConfig;
use crate::pose::{body, PoseSequence, LEFT_HAND, RIGHT_HAND};

type Pt = (f64, f64);

/// Draws from `[-max, max]`. Always consumes one value so the random stream
/// does not depend on the configured maxima.
fn symmetric(rng: &mut impl Rng, max: f64) -> f64 {
    (2.0 * rng.gen::<f64>() - 1.0) * max
}

/// Rotation in pixel space so the angle is not skewed by the frame aspect.
fn rotate(p: Pt, center: Pt, deg: f64, aspect: f64) -> Pt {
    let (s, c) = deg.to_radians().sin_cos();
    let dx = (p.0 - center.0) * aspect;
    let dy = p.1 - center.1;
    (center.0 + (c * dx - s * dy) / aspect, center.1 + s * dx + c * dy)
}

fn arm_chain(left: bool) -> Vec<usize> {
    let (elbow, wrist, hand_pts, hand) = if left {
        (body::LEFT_ELBOW, body::LEFT_WRIST, body::LEFT_HAND_POINTS, LEFT_HAND)
    } else {
        (body::RIGHT_ELBOW, body::RIGHT_WRIST, body::RIGHT_HAND_POINTS, RIGHT_HAND)
    };
    let mut v = vec![elbow, wrist];
    v.extend(hand_pts);
    v.extend(hand);
    v
}

/// 3x3 homography (last entry fixed to 1) mapping `src[i]` to `dst[i]`.
fn homography(src: [Pt; 4], dst: [Pt; 4]) -> [f64; 9] {
    let mut a = [[0.0f64; 9]; 8];
    for i in 0..4 {
        let ((x, y), (u, v)) = (src[i], dst[i]);
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, u];
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, v];
    }
    for col in 0..8 {
        let pivot = (col..8)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        a.swap(col, pivot);
        let d = a[col][col];
        for k in col..9 {
            a[col][k] /= d;
        }
        for r in 0..8 {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for k in col..9 {
                        a[r][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    let mut h = [0.0; 9];
    for i in 0..8 {
        h[i] = a[i][8];
    }
    h[8] = 1.0;
    h
}

fn apply_h(h: &[f64; 9], p: Pt) -> Pt {
    let w = h[6] * p.0 + h[7] * p.1 + h[8];
    ((h[0] * p.0 + h[1] * p.1 + h[2]) / w, (h[3] * p.0 + h[4] * p.1 + h[5]) / w)
}

/// With probability `apply_probability`, applies the configured transforms
/// with one set of parameters shared by all frames, then clamps to the unit
/// square.
pub fn augment(seq: &PoseSequence, cfg: &AugmentationConfig, rng: &mut impl Rng) -> PoseSequence {
    if rng.gen::<f64>() >= cfg.apply_probability {
        return seq.clone();
    }
    let (w, h) = seq.source_resolution();
    let aspect = w as f64 / h as f64;

    let mut arm_angles = [None, None];
    for slot in arm_angles.iter_mut() {
        let gate = rng.gen::<f64>() < cfg.arm_joint_rotate_probability;
        let angle = symmetric(rng, cfg.max_arm_joint_rotate_deg);
        if gate {
            *slot = Some(angle);
        }
    }
    let global = symmetric(rng, cfg.max_global_rotate_deg);
    let squeeze = 1.0 - rng.gen::<f64>() * cfg.max_squeeze_ratio;
    let (tl, tr) = (
        rng.gen::<f64>() * cfg.max_perspective_ratio,
        rng.gen::<f64>() * cfg.max_perspective_ratio,
    );
    let persp = homography(
        [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
        [(tl, 0.0), (1.0 - tr, 0.0), (1.0, 1.0), (0.0, 1.0)],
    );
    let chains = [
        (arm_chain(true), body::LEFT_SHOULDER, arm_angles[0]),
        (arm_chain(false), body::RIGHT_SHOULDER, arm_angles[1]),
    ];

    let mut out = seq.clone();
    for frame in out.frames_mut() {
        let lms = frame.landmarks_mut();
        let mut pts: Vec<Pt> = lms.iter().map(|l| (l.x as f64, l.y as f64)).collect();
        for (chain, shoulder, angle) in &chains {
            if let Some(deg) = angle {
                let pivot = pts[*shoulder];
                for &i in chain {
                    pts[i] = rotate(pts[i], pivot, *deg, aspect);
                }
            }
        }
        for p in pts.iter_mut() {
            let r = rotate(*p, (0.5, 0.5), global, aspect);
            let s = (0.5 + (r.0 - 0.5) * squeeze, r.1);
            *p = apply_h(&persp, s);
        }
        for (lm, p) in lms.iter_mut().zip(&pts) {
            lm.x = p.0.clamp(0.0, 1.0) as f32;
            lm.y = p.1.clamp(0.0, 1.0) as f32;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::synth::synthesize_sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_maxima() -> AugmentationConfig {
        AugmentationConfig {
            apply_probability: 1.0,
            max_arm_joint_rotate_deg: 0.0,
            arm_joint_rotate_probability: 1.0,
            max_global_rotate_deg: 0.0,
            max_squeeze_ratio: 0.0,
            max_perspective_ratio: 0.0,
        }
    }

    fn max_abs_diff(a: &PoseSequence, b: &PoseSequence) -> f64 {
        a.frames()
            .iter()
            .zip(b.frames())
            .flat_map(|(x, y)| x.landmarks().iter().zip(y.landmarks()))
            .map(|(p, q)| ((p.x - q.x).abs().max((p.y - q.y).abs())) as f64)
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_maxima_is_identity() {
        let s = synthesize_sample(4, 0, 10, 0.02, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = augment(&s, &zero_maxima(), &mut rng);
        assert!(max_abs_diff(&s, &a) <= 1e-9);
    }

    #[test]
    fn zero_probability_is_identity() {
        let s = synthesize_sample(4, 0, 10, 0.02, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = AugmentationConfig { apply_probability: 0.0, ..Default::default() };
        assert_eq!(augment(&s, &cfg, &mut rng), s);
    }

    #[test]
    fn seeded_runs_repeat() {
        let s = synthesize_sample(5, 0, 10, 0.02, 2).unwrap();
        let cfg = AugmentationConfig { apply_probability: 1.0, ..Default::default() };
        let a = augment(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(11));
        let b = augment(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, b);
        assert!(max_abs_diff(&s, &a) > 1e-4);
    }

    #[test]
    fn homography_identity_and_corners() {
        let sq = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let id = homography(sq, sq);
        let p = apply_h(&id, (0.3, 0.7));
        assert!((p.0 - 0.3).abs() < 1e-12 && (p.1 - 0.7).abs() < 1e-12);
        let dst = [(0.1, 0.0), (0.85, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let h = homography(sq, dst);
        for (s, d) in sq.iter().zip(dst) {
            let m = apply_h(&h, *s);
            assert!((m.0 - d.0).abs() < 1e-12 && (m.1 - d.1).abs() < 1e-12);
        }
    }

    #[test]
    fn arm_rotation_keeps_shoulder_distance() {
        let s = synthesize_sample(0, 0, 1, 0.0, 2).unwrap();
        let cfg = AugmentationConfig {
            max_global_rotate_deg: 0.0,
            max_squeeze_ratio: 0.0,
            max_perspective_ratio: 0.0,
            max_arm_joint_rotate_deg: 30.0,
            ..zero_maxima()
        };
        let a = augment(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(5));
        let dist = |seq: &PoseSequence, i: usize| {
            let f = &seq.frames()[0];
            let (sh, p) = (f[body::RIGHT_SHOULDER], f[i]);
            (((p.x - sh.x) * 640.0 / 480.0).powi(2) + (p.y - sh.y).powi(2)).sqrt()
        };
        assert!((dist(&s, body::RIGHT_WRIST) - dist(&a, body::RIGHT_WRIST)).abs() < 1e-5);
        assert_ne!(s.frames()[0][body::RIGHT_WRIST], a.frames()[0][body::RIGHT_WRIST]);
        assert_eq!(s.frames()[0][body::NOSE], a.frames()[0][body::NOSE]);
    }
}
