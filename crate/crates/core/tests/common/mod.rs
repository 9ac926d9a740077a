#![allow(dead_code)]

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use synergid::body::{BodyModel, Posture};

/// Planar homogeneous rotation, counter-clockwise positive.
pub fn rot(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn trans(x: f64, y: f64) -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, x, 0.0, 1.0, y, 0.0, 0.0, 1.0)
}

fn origin(t: &Matrix3<f64>) -> (f64, f64) {
    let p = t * Vector3::new(0.0, 0.0, 1.0);
    (p.x, p.y)
}

/// Landmarks `[acromion, elbow, fingertip]` from a brute-force transform
/// chain. Forward lean is a clockwise rotation of the trunk frame; the arm
/// hangs along the trunk frame's -y axis and flexes counter-clockwise.
pub fn oracle_chain(body: &BodyModel, p: &Posture) -> [(f64, f64); 3] {
    let shoulder =
        trans(p.shoulder_protraction, 0.0) * rot(-p.trunk_pitch) * trans(0.0, body.trunk_length);
    let elbow = shoulder * rot(p.shoulder_flexion) * trans(0.0, -body.upper_arm_length);
    let tip = elbow * rot(p.elbow_flexion) * trans(0.0, -body.forearm_plus_hand_length);
    [origin(&shoulder), origin(&elbow), origin(&tip)]
}

pub fn random_body<R: Rng>(rng: &mut R) -> BodyModel {
    BodyModel::new(
        rng.random_range(0.35..0.7),
        rng.random_range(0.12..0.24),
        rng.random_range(0.22..0.38),
        rng.random_range(0.3..0.55),
    )
    .unwrap()
}

pub fn random_posture<R: Rng>(rng: &mut R) -> Posture {
    Posture::new(
        rng.random_range(-std::f64::consts::FRAC_PI_4..std::f64::consts::FRAC_PI_2),
        rng.random_range(-0.05..0.2),
        rng.random_range(-0.5..3.0),
        rng.random_range(0.0..std::f64::consts::PI),
    )
    .unwrap()
}

/// Smooth reach-like posture series on `times`, shaped by `k` in [0, 1].
pub fn smooth_series(times: &[f64], k: [f64; 4]) -> Vec<Posture> {
    let end = *times.last().unwrap();
    times
        .iter()
        .map(|&t| {
            let u = t / end;
            let s = u * u * (3.0 - 2.0 * u);
            Posture {
                trunk_pitch: 0.3 * k[0] * s,
                shoulder_protraction: 0.1 * k[1] * s,
                shoulder_flexion: 0.3 + (0.6 + k[2]) * s,
                elbow_flexion: 0.4 + 1.5 * k[3] * (1.0 - s) + 0.2 * (6.0 * u).sin().abs(),
            }
        })
        .collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
