//! Simulated reaching subject.
//!
//! Steady-state compensation is piecewise linear in the synergy error with
//! a flat region around `theta_natural`. The trunk/shoulder split depends on
//! the subject's strategy. On top of that sit first-order motor learning,
//! a warm-up decrement after rest, Gaussian displacement noise and an
//! optional one-off strategy switch.

use crate::body::{
    fingertip_position, required_trunk_pitch, screen_for_subject, BodyModel, KinematicsError,
    Posture,
};
use crate::imu::{
    synergy_elbow_trajectory, synthesize_trial, MountingOffsets, ReachOutcome, ReachTrial,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

pub const REACH_DURATION_S: f64 = 1.5;
pub const REACH_SAMPLE_HZ: f64 = 50.0;
/// Shoulder flexion at reach onset and its excursion, radians.
pub const SHOULDER_FLEXION_START: f64 = 0.5;
pub const SHOULDER_FLEXION_RANGE: f64 = 1.0;
/// Elbow angle at the end of a reach performed with the natural synergy.
pub const ELBOW_FINAL_NATURAL: f64 = 0.3;
/// Protraction limits as fractions of the C7-acromion distance.
const PROTRACTION_LIMITS: (f64, f64) = (-0.5, 0.9);
const SENSOR_OFFSETS: MountingOffsets = MountingOffsets {
    c7: 0.04,
    sa: -0.02,
};

pub const PRESET_NAMES: [&str; 9] = [
    "subject1", "subject2", "subject3", "subject4", "subject5", "subject6", "subject7", "subject8",
    "subject9",
];

const PRESETS: [&str; 9] = [
    include_str!("../presets/subject1.json"),
    include_str!("../presets/subject2.json"),
    include_str!("../presets/subject3.json"),
    include_str!("../presets/subject4.json"),
    include_str!("../presets/subject5.json"),
    include_str!("../presets/subject6.json"),
    include_str!("../presets/subject7.json"),
    include_str!("../presets/subject8.json"),
    include_str!("../presets/subject9.json"),
];

#[derive(Debug, Error)]
pub enum SubjectError {
    #[error("invalid subject profile: {field} {reason}")]
    InvalidProfile { field: &'static str, reason: String },
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("cannot read profile {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse profile {path}: {message}")]
    Parse { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    TrunkDominant,
    Mixed,
    ShoulderDominant,
}

impl Strategy {
    /// Fraction of the excess compensation carried by the trunk.
    pub fn trunk_share(self) -> f64 {
        match self {
            Strategy::TrunkDominant => 0.9,
            Strategy::Mixed => 0.6,
            Strategy::ShoulderDominant => 0.3,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Strategy::TrunkDominant => "TrunkDominant",
            Strategy::Mixed => "Mixed",
            Strategy::ShoulderDominant => "ShoulderDominant",
        };
        f.write_str(s)
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "TrunkDominant" => Ok(Strategy::TrunkDominant),
            "Mixed" => Ok(Strategy::Mixed),
            "ShoulderDominant" => Ok(Strategy::ShoulderDominant),
            other => Err(format!("unknown strategy '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategySwitch {
    /// Number of completed reaches after which the new strategy applies.
    pub iteration: usize,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    #[serde(default)]
    pub id: String,
    pub body: BodyModel,
    pub theta_natural: f64,
    /// Metres of compensation per unit synergy error.
    pub trunk_slope: f64,
    pub shoulder_strategy: Strategy,
    /// Shoulder displacement at the natural synergy, metres.
    pub natural_protraction: f64,
    pub learning_rate: f64,
    /// Standard deviation of the displacement noise, metres.
    pub motor_noise_sd: f64,
    /// Fraction of the learned behaviour lost at a rest.
    pub warmup_decrement: f64,
    #[serde(default)]
    pub strategy_switch: Option<StrategySwitch>,
    pub flat_region_halfwidth: f64,
    /// Extra trunk lean of a fully unpractised reach, metres.
    #[serde(default)]
    pub naive_compensation: f64,
    #[serde(default)]
    pub initial_learned_fraction: f64,
}

fn invalid(field: &'static str, reason: impl Into<String>) -> SubjectError {
    SubjectError::InvalidProfile {
        field,
        reason: reason.into(),
    }
}

impl SubjectProfile {
    pub fn preset(name: &str) -> Result<Self, SubjectError> {
        let idx = PRESET_NAMES
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| SubjectError::UnknownPreset(name.to_string()))?;
        let profile: SubjectProfile =
            serde_json::from_str(PRESETS[idx]).map_err(|e| SubjectError::Parse {
                path: name.to_string(),
                message: e.to_string(),
            })?;
        profile.validate()?;
        Ok(profile)
    }

    /// Reads a JSON or TOML profile, chosen by file extension.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, SubjectError> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| SubjectError::Io {
            path: shown.clone(),
            source,
        })?;
        let parse_err = |message: String| SubjectError::Parse {
            path: shown.clone(),
            message,
        };
        let mut profile: SubjectProfile = if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("toml"))
        {
            toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        } else {
            serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        };
        if profile.id.is_empty() {
            profile.id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        profile.validate()?;
        Ok(profile)
    }

    /// A preset name or a path to a profile file.
    pub fn load(name_or_path: &str) -> Result<Self, SubjectError> {
        if PRESET_NAMES.contains(&name_or_path) {
            Self::preset(name_or_path)
        } else {
            Self::from_path(name_or_path)
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.motor_noise_sd = 0.0;
        self
    }

    pub fn validate(&self) -> Result<(), SubjectError> {
        self.body
            .validate()
            .map_err(|e| invalid("body", e.to_string()))?;
        let checks = [
            ("theta_natural", self.theta_natural),
            ("trunk_slope", self.trunk_slope),
            ("natural_protraction", self.natural_protraction),
            ("learning_rate", self.learning_rate),
            ("motor_noise_sd", self.motor_noise_sd),
            ("warmup_decrement", self.warmup_decrement),
            ("flat_region_halfwidth", self.flat_region_halfwidth),
            ("naive_compensation", self.naive_compensation),
            ("initial_learned_fraction", self.initial_learned_fraction),
        ];
        for (field, v) in checks {
            if !v.is_finite() {
                return Err(invalid(field, format!("must be finite, got {v}")));
            }
        }
        if !(self.theta_natural > 0.8 && self.theta_natural < 2.7) {
            return Err(invalid(
                "theta_natural",
                format!("must lie in (0.8, 2.7), got {}", self.theta_natural),
            ));
        }
        if self.trunk_slope < 0.0 {
            return Err(invalid("trunk_slope", "must be >= 0"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(invalid(
                "learning_rate",
                format!("must lie in (0, 1], got {}", self.learning_rate),
            ));
        }
        if self.motor_noise_sd < 0.0 {
            return Err(invalid("motor_noise_sd", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.warmup_decrement) {
            return Err(invalid("warmup_decrement", "must lie in [0, 1]"));
        }
        if self.flat_region_halfwidth < 0.0 {
            return Err(invalid("flat_region_halfwidth", "must be >= 0"));
        }
        if self.naive_compensation < 0.0 {
            return Err(invalid("naive_compensation", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.initial_learned_fraction) {
            return Err(invalid("initial_learned_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Evolving state of one simulated subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorState {
    pub learned_fraction: f64,
    pub iterations_done: usize,
    pub rng: ChaCha8Rng,
    pub active_strategy: Strategy,
}

impl MotorState {
    pub fn new(profile: &SubjectProfile, seed: u64) -> Self {
        Self {
            learned_fraction: profile.initial_learned_fraction,
            iterations_done: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            active_strategy: profile.shoulder_strategy,
        }
    }

    /// Fully practised subject, as after a familiarisation session.
    pub fn trained(profile: &SubjectProfile, seed: u64) -> Self {
        Self {
            learned_fraction: 1.0,
            ..Self::new(profile, seed)
        }
    }
}

fn soft_threshold(x: f64, h: f64) -> f64 {
    x.signum() * (x.abs() - h).max(0.0)
}

pub fn steady_state_outcome(profile: &SubjectProfile, theta: f64) -> ReachOutcome {
    steady_state_outcome_with(profile, profile.shoulder_strategy, theta)
}

pub fn steady_state_outcome_with(
    profile: &SubjectProfile,
    strategy: Strategy,
    theta: f64,
) -> ReachOutcome {
    let error = soft_threshold(theta - profile.theta_natural, profile.flat_region_halfwidth).abs();
    let share = strategy.trunk_share();
    let excess = error * profile.trunk_slope;
    ReachOutcome {
        iteration_index: 0,
        trunk_disp: excess * share,
        shoulder_disp: profile.natural_protraction + excess * (1.0 - share),
    }
}

/// `10τ³ - 15τ⁴ + 6τ⁵`.
pub fn minimum_jerk(tau: f64) -> f64 {
    let t = tau.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

fn minimum_jerk_rate(tau: f64) -> f64 {
    let t = tau.clamp(0.0, 1.0);
    30.0 * t * t * (1.0 - t) * (1.0 - t)
}

/// Elbow angle at reach onset such that the natural synergy ends at
/// [`ELBOW_FINAL_NATURAL`].
pub fn initial_elbow(profile: &SubjectProfile) -> f64 {
    ELBOW_FINAL_NATURAL + profile.theta_natural * SHOULDER_FLEXION_RANGE
}

/// Trunk pitch the rigid-link model needs to touch the screen at the end of
/// a reach with synergy `theta` and no protraction. Diagnostic only: the
/// simulated displacements come from the phenomenological model.
pub fn geometric_trunk_pitch(profile: &SubjectProfile, theta: f64) -> Result<f64, KinematicsError> {
    let elbow =
        (initial_elbow(profile) - theta * SHOULDER_FLEXION_RANGE).clamp(0.0, std::f64::consts::PI);
    required_trunk_pitch(
        &profile.body,
        &screen_for_subject(&profile.body),
        elbow,
        SHOULDER_FLEXION_START + SHOULDER_FLEXION_RANGE,
        0.0,
    )
}

/// Final fingertip reach of the no-compensation posture, metres forward.
pub fn arm_only_reach(profile: &SubjectProfile, theta: f64) -> f64 {
    let elbow =
        (initial_elbow(profile) - theta * SHOULDER_FLEXION_RANGE).clamp(0.0, std::f64::consts::PI);
    let posture = Posture {
        trunk_pitch: 0.0,
        shoulder_protraction: 0.0,
        shoulder_flexion: SHOULDER_FLEXION_START + SHOULDER_FLEXION_RANGE,
        elbow_flexion: elbow,
    };
    fingertip_position(&profile.body, &posture).0
}

/// Displacements of the next reach before they are rendered into sensor
/// data. Advances the random stream.
pub fn sample_outcome(
    profile: &SubjectProfile,
    state: &mut MotorState,
    theta: f64,
) -> ReachOutcome {
    let ss = steady_state_outcome_with(profile, state.active_strategy, theta);
    let extra = profile.naive_compensation * (1.0 - state.learned_fraction);
    let noise = Normal::new(0.0, profile.motor_noise_sd).expect("validated noise sd");
    let trunk = ss.trunk_disp + extra + noise.sample(&mut state.rng);
    let shoulder = ss.shoulder_disp + extra + noise.sample(&mut state.rng);
    ReachOutcome {
        iteration_index: state.iterations_done,
        trunk_disp: trunk,
        shoulder_disp: shoulder,
    }
}

/// Performs one reach at synergy `theta`: samples the displacements,
/// renders a minimum-jerk reach into C7/SA/UA sensor data, then advances
/// learning. The trunk and shoulder peaks land on the final sample.
pub fn perform_reach(
    profile: &SubjectProfile,
    state: &MotorState,
    theta: f64,
) -> (ReachTrial, MotorState) {
    let mut next = state.clone();
    let target = sample_outcome(profile, &mut next, theta);
    let trial = render_reach(profile, state.iterations_done, theta, &target);
    next.learned_fraction += profile.learning_rate * (1.0 - next.learned_fraction);
    next.iterations_done += 1;
    (trial, next)
}

/// Sensor data of a reach ending at the given displacements.
pub fn render_reach(
    profile: &SubjectProfile,
    iteration_index: usize,
    theta: f64,
    target: &ReachOutcome,
) -> ReachTrial {
    let body = &profile.body;
    let n = (REACH_DURATION_S * REACH_SAMPLE_HZ).round() as usize + 1;
    let dt = 1.0 / REACH_SAMPLE_HZ;
    let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let taus: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();

    let trunk_ratio = (target.trunk_disp / body.trunk_length).clamp(-1.0, 1.0);
    let (lo, hi) = PROTRACTION_LIMITS;
    let protraction = (target.shoulder_disp - target.trunk_disp)
        .clamp(lo * body.c7_to_acromion, hi * body.c7_to_acromion);

    let rate: Vec<f64> = taus
        .iter()
        .map(|&t| -SHOULDER_FLEXION_RANGE * minimum_jerk_rate(t) / REACH_DURATION_S)
        .collect();
    let elbow = synergy_elbow_trajectory(theta, &rate, dt, initial_elbow(profile))
        .expect("non-empty rate series");

    let postures: Vec<Posture> = taus
        .iter()
        .zip(&elbow.angles)
        .map(|(&t, &e)| {
            let s = minimum_jerk(t);
            Posture {
                trunk_pitch: (trunk_ratio * s).asin(),
                shoulder_protraction: protraction * s,
                shoulder_flexion: SHOULDER_FLEXION_START + SHOULDER_FLEXION_RANGE * s,
                elbow_flexion: e,
            }
        })
        .collect();

    synthesize_trial(
        iteration_index,
        theta,
        &times,
        &postures,
        body,
        SENSOR_OFFSETS,
        false,
    )
}

/// Rest between blocks: `learned ← learned · (1 - w)`.
pub fn rest_event(profile: &SubjectProfile, state: &MotorState) -> MotorState {
    let mut next = state.clone();
    next.learned_fraction *= 1.0 - profile.warmup_decrement;
    next
}

pub fn maybe_strategy_switch(profile: &SubjectProfile, state: &MotorState) -> MotorState {
    let mut next = state.clone();
    if let Some(switch) = profile.strategy_switch {
        if switch.iteration == state.iterations_done {
            next.active_strategy = switch.strategy;
        }
    }
    next
}
