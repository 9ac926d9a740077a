//! Planar (sagittal) rigid-link model of the seated upper body.
//!
//! Coordinates are metres relative to the trunk pivot (seat): `forward` is
//! horizontal towards the screen, `height` is vertical. With the trunk
//! upright the acromion sits directly above the pivot, so forward distances
//! are also measured from the upright shoulder.
//!
//! Joint angles follow the usual relative convention: trunk pitch is taken
//! from vertical, shoulder flexion from the trunk axis (arm hanging = 0),
//! elbow flexion from the upper-arm axis (straight arm = 0). Shoulder
//! protraction is a horizontal translation of the acromion.
//!
//! Leaning forward rotates the whole arm with the trunk, so the upper arm's
//! elevation from the downward vertical is `shoulder_flexion - trunk_pitch`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use thiserror::Error;

/// Gap tolerance for [`required_trunk_pitch`], metres.
pub const PITCH_ROOT_TOLERANCE: f64 = 1e-6;

/// Default fingertip-to-wrist offset used when placing the screen.
pub const DEFAULT_HAND_MARGIN: f64 = 0.08;

const PITCH_SCAN_STEPS: usize = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("invalid body model: {field} = {value}")]
    InvalidBody { field: &'static str, value: f64 },
    #[error("invalid posture: {field} = {value}")]
    InvalidPosture { field: &'static str, value: f64 },
    #[error("target at {forward:.4} m cannot be reached with trunk pitch <= pi/2")]
    Unreachable { forward: f64 },
}

/// Segment lengths of a subject's upper body, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyModel {
    /// Seat pivot to C7.
    pub trunk_length: f64,
    pub c7_to_acromion: f64,
    pub upper_arm_length: f64,
    /// Elbow to fingertip.
    pub forearm_plus_hand_length: f64,
}

impl BodyModel {
    pub fn new(
        trunk_length: f64,
        c7_to_acromion: f64,
        upper_arm_length: f64,
        forearm_plus_hand_length: f64,
    ) -> Result<Self, KinematicsError> {
        let body = Self {
            trunk_length,
            c7_to_acromion,
            upper_arm_length,
            forearm_plus_hand_length,
        };
        body.validate()?;
        Ok(body)
    }

    /// Adult-sized default used by the shipped presets.
    pub fn typical() -> Self {
        Self {
            trunk_length: 0.52,
            c7_to_acromion: 0.18,
            upper_arm_length: 0.30,
            forearm_plus_hand_length: 0.45,
        }
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        for (field, value) in [
            ("trunk_length", self.trunk_length),
            ("c7_to_acromion", self.c7_to_acromion),
            ("upper_arm_length", self.upper_arm_length),
            ("forearm_plus_hand_length", self.forearm_plus_hand_length),
        ] {
            if !(value > 0.0 && value < 2.0) {
                return Err(KinematicsError::InvalidBody { field, value });
            }
        }
        if self.arm_length() <= 0.3 {
            return Err(KinematicsError::InvalidBody {
                field: "arm_length",
                value: self.arm_length(),
            });
        }
        Ok(())
    }

    pub fn arm_length(&self) -> f64 {
        self.upper_arm_length + self.forearm_plus_hand_length
    }

    /// Height of the acromion above the pivot with the trunk upright.
    pub fn shoulder_height(&self) -> f64 {
        self.trunk_length
    }
}

/// Joint configuration of the planar chain.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Posture {
    /// Radians, 0 = upright, positive = forward lean.
    pub trunk_pitch: f64,
    /// Metres, forward translation of the acromion.
    pub shoulder_protraction: f64,
    /// Radians, 0 = arm hanging, pi/2 = arm horizontal.
    pub shoulder_flexion: f64,
    /// Radians, 0 = straight arm.
    pub elbow_flexion: f64,
}

impl Posture {
    pub fn new(
        trunk_pitch: f64,
        shoulder_protraction: f64,
        shoulder_flexion: f64,
        elbow_flexion: f64,
    ) -> Result<Self, KinematicsError> {
        let p = Self {
            trunk_pitch,
            shoulder_protraction,
            shoulder_flexion,
            elbow_flexion,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        let checks = [
            ("trunk_pitch", self.trunk_pitch, -FRAC_PI_4, FRAC_PI_2),
            ("elbow_flexion", self.elbow_flexion, 0.0, PI),
            (
                "shoulder_protraction",
                self.shoulder_protraction,
                -0.05,
                0.20,
            ),
            ("shoulder_flexion", self.shoulder_flexion, -PI, PI),
        ];
        for (field, value, lo, hi) in checks {
            if !(value >= lo && value <= hi) {
                return Err(KinematicsError::InvalidPosture { field, value });
            }
        }
        Ok(())
    }
}

/// Screen placement in front of the subject.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenTarget {
    pub forward_distance: f64,
    pub height: f64,
}

/// Forward translation of C7 relative to the upright posture.
pub fn trunk_displacement(body: &BodyModel, posture: &Posture) -> f64 {
    body.trunk_length * posture.trunk_pitch.sin()
}

/// Forward translation of the acromion: trunk contribution plus protraction.
pub fn shoulder_displacement(body: &BodyModel, posture: &Posture) -> f64 {
    trunk_displacement(body, posture) + posture.shoulder_protraction
}

fn direction(angle_from_down: f64) -> (f64, f64) {
    (angle_from_down.sin(), -angle_from_down.cos())
}

/// Upper-arm angle from the downward vertical, forward positive.
pub fn upper_arm_elevation(posture: &Posture) -> f64 {
    posture.shoulder_flexion - posture.trunk_pitch
}

/// Acromion position `(forward, height)`.
pub fn shoulder_position(body: &BodyModel, posture: &Posture) -> (f64, f64) {
    let p = posture.trunk_pitch;
    (
        body.trunk_length * p.sin() + posture.shoulder_protraction,
        body.trunk_length * p.cos(),
    )
}

/// Elbow position `(forward, height)`.
pub fn elbow_position(body: &BodyModel, posture: &Posture) -> (f64, f64) {
    let (sx, sy) = shoulder_position(body, posture);
    let (dx, dy) = direction(upper_arm_elevation(posture));
    (
        sx + body.upper_arm_length * dx,
        sy + body.upper_arm_length * dy,
    )
}

/// Fingertip position `(forward, height)` at the end of the chain
/// pivot → C7 → acromion → elbow → fingertip.
pub fn fingertip_position(body: &BodyModel, posture: &Posture) -> (f64, f64) {
    let (ex, ey) = elbow_position(body, posture);
    let (dx, dy) = direction(upper_arm_elevation(posture) + posture.elbow_flexion);
    (
        ex + body.forearm_plus_hand_length * dx,
        ey + body.forearm_plus_hand_length * dy,
    )
}

/// Screen placed at the wrist of the straight, horizontal arm.
pub fn screen_for_subject(body: &BodyModel) -> ScreenTarget {
    screen_for_subject_with_margin(body, DEFAULT_HAND_MARGIN)
}

pub fn screen_for_subject_with_margin(body: &BodyModel, hand_margin: f64) -> ScreenTarget {
    ScreenTarget {
        forward_distance: body.arm_length() - hand_margin,
        height: body.shoulder_height(),
    }
}

/// Smallest non-negative trunk pitch that brings the fingertip forward to the
/// screen, holding the arm joints and protraction fixed.
///
/// The forward reach is not monotone in pitch (leaning tips the arm down),
/// so the interval is scanned for the first crossing and then bisected.
pub fn required_trunk_pitch(
    body: &BodyModel,
    target: &ScreenTarget,
    elbow_flexion: f64,
    shoulder_flexion: f64,
    protraction: f64,
) -> Result<f64, KinematicsError> {
    let gap = |pitch: f64| {
        let posture = Posture {
            trunk_pitch: pitch,
            shoulder_protraction: protraction,
            shoulder_flexion,
            elbow_flexion,
        };
        target.forward_distance - fingertip_position(body, &posture).0
    };

    if gap(0.0) <= 0.0 {
        return Ok(0.0);
    }

    let step = FRAC_PI_2 / PITCH_SCAN_STEPS as f64;
    let mut lo = 0.0;
    let mut hi = None;
    for i in 1..=PITCH_SCAN_STEPS {
        let p = (i as f64 * step).min(FRAC_PI_2);
        if gap(p) <= 0.0 {
            hi = Some(p);
            break;
        }
        lo = p;
    }
    let mut hi = hi.ok_or(KinematicsError::Unreachable {
        forward: target.forward_distance,
    })?;

    // gap(lo) > 0 >= gap(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g = gap(mid);
        if g.abs() < 0.01 * PITCH_ROOT_TOLERANCE || hi - lo < 1e-15 {
            return Ok(mid);
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
