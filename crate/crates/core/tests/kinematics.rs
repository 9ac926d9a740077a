mod common;

use proptest::prelude::*;
use synergid::body::{
    elbow_position, fingertip_position, required_trunk_pitch, screen_for_subject,
    shoulder_displacement, shoulder_position, trunk_displacement, BodyModel, Posture,
};

use common::oracle_chain;

fn body() -> impl Strategy<Value = BodyModel> {
    (0.35..0.7f64, 0.12..0.24f64, 0.22..0.38f64, 0.3..0.55f64)
        .prop_map(|(t, c, u, f)| BodyModel::new(t, c, u, f).unwrap())
}

fn posture() -> impl Strategy<Value = Posture> {
    (
        -std::f64::consts::FRAC_PI_4..std::f64::consts::FRAC_PI_2,
        -0.05..0.2f64,
        -0.5..3.0f64,
        0.0..std::f64::consts::PI,
    )
        .prop_map(|(p, r, f, e)| Posture::new(p, r, f, e).unwrap())
}

fn close(a: (f64, f64), b: (f64, f64)) -> bool {
    (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn chain_matches_transform_oracle(b in body(), p in posture()) {
        let [shoulder, elbow, tip] = oracle_chain(&b, &p);
        prop_assert!(close(shoulder_position(&b, &p), shoulder));
        prop_assert!(close(elbow_position(&b, &p), elbow));
        prop_assert!(close(fingertip_position(&b, &p), tip));
    }

    #[test]
    fn segment_lengths_are_preserved(b in body(), p in posture()) {
        let dist = |a: (f64, f64), c: (f64, f64)| (a.0 - c.0).hypot(a.1 - c.1);
        let s = shoulder_position(&b, &p);
        let e = elbow_position(&b, &p);
        let t = fingertip_position(&b, &p);
        prop_assert!((dist(s, e) - b.upper_arm_length).abs() < 1e-12);
        prop_assert!((dist(e, t) - b.forearm_plus_hand_length).abs() < 1e-12);
    }

    #[test]
    fn shoulder_displacement_adds_protraction(b in body(), p in posture()) {
        let expected = b.trunk_length * p.trunk_pitch.sin() + p.shoulder_protraction;
        prop_assert!((shoulder_displacement(&b, &p) - expected).abs() < 1e-12);
        prop_assert!((shoulder_displacement(&b, &p) - trunk_displacement(&b, &p) - p.shoulder_protraction).abs() < 1e-15);
    }

    #[test]
    fn required_pitch_reaches_the_screen(b in body(), elbow in 0.3..1.2f64) {
        let screen = screen_for_subject(&b);
        if let Ok(pitch) = required_trunk_pitch(&b, &screen, elbow, std::f64::consts::FRAC_PI_2, 0.0) {
            let p = Posture { trunk_pitch: pitch, shoulder_protraction: 0.0, shoulder_flexion: std::f64::consts::FRAC_PI_2, elbow_flexion: elbow };
            if pitch > 0.0 {
                prop_assert!((fingertip_position(&b, &p).0 - screen.forward_distance).abs() < 1e-5);
            } else {
                prop_assert!(fingertip_position(&b, &p).0 >= screen.forward_distance);
            }
        }
    }
}

#[test]
fn upright_hanging_arm_is_vertical() {
    let b = BodyModel::typical();
    let p = Posture::default();
    let tip = fingertip_position(&b, &p);
    assert!(tip.0.abs() < 1e-15);
    let expected = b.trunk_length - b.upper_arm_length - b.forearm_plus_hand_length;
    assert!((tip.1 - expected).abs() < 1e-15);
}

#[test]
fn invalid_postures_are_rejected() {
    assert!(Posture::new(2.0, 0.0, 0.0, 0.0).is_err());
    assert!(Posture::new(0.0, 0.5, 0.0, 0.0).is_err());
    assert!(Posture::new(0.0, 0.0, 0.0, -0.1).is_err());
    assert!(Posture::new(f64::NAN, 0.0, 0.0, 0.0).is_err());
    assert!(BodyModel::new(0.5, 0.18, -0.3, 0.4).is_err());
}
