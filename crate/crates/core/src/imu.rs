//! IMU orientation logs to joint angles and compensation features.
//!
//! Also hosts the time-domain synergy law that drives the prosthetic elbow
//! from upper-arm motion, and the forward model that turns a posture series
//! back into sensor samples (used by the simulated subject and the tests).

use crate::body::{
    shoulder_displacement, trunk_displacement, upper_arm_elevation, BodyModel, Posture,
};
use log::warn;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

pub const DEFAULT_RESAMPLE_HZ: f64 = 50.0;
pub const MIN_TRIAL_SPAN_S: f64 = 0.1;
/// Synergy values outside this range are accepted with a warning.
pub const SYNERGY_RANGE: (f64, f64) = (0.8, 2.7);

pub const TRIAL_LOG_HEADER: [&str; 7] = [
    "iteration",
    "timestamp_s",
    "site",
    "pitch_rad",
    "roll_rad",
    "yaw_rad",
    "theta",
];

#[derive(Debug, Error)]
pub enum ImuError {
    #[error("empty series")]
    EmptySeries,
    #[error("trial {iteration} has no usable {site} samples")]
    SiteMissing { iteration: usize, site: Site },
    #[error("trial {iteration} spans only {span:.3} s of overlapping data")]
    DegenerateTrial { iteration: usize, span: f64 },
    #[error("line {line}: {message}")]
    FormatError { line: u64, message: String },
    #[error("trial log is empty")]
    EmptyFile,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sensor mounting site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Site {
    /// 7th cervical vertebra (trunk).
    C7,
    /// Shoulder acromion.
    SA,
    /// Upper arm.
    UA,
    /// Lower arm (able-bodied sessions only).
    LA,
}

impl Site {
    pub const ALL: [Site; 4] = [Site::C7, Site::SA, Site::UA, Site::LA];

    pub fn as_str(&self) -> &'static str {
        match self {
            Site::C7 => "C7",
            Site::SA => "SA",
            Site::UA => "UA",
            Site::LA => "LA",
        }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Site {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "C7" => Ok(Site::C7),
            "SA" => Ok(Site::SA),
            "UA" => Ok(Site::UA),
            "LA" => Ok(Site::LA),
            other => Err(format!("unknown site '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub timestamp: f64,
    pub site: Site,
    pub pitch: f64,
    pub roll: f64,
    pub yaw: f64,
}

/// All samples recorded during one reach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachTrial {
    pub iteration_index: usize,
    pub samples: Vec<ImuSample>,
    pub synergy_value: f64,
}

impl ReachTrial {
    /// Time-ordered `(timestamp, pitch)` pairs of one site.
    pub fn site_series(&self, site: Site) -> Vec<(f64, f64)> {
        let mut series: Vec<(f64, f64)> = self
            .samples
            .iter()
            .filter(|s| s.site == site)
            .map(|s| (s.timestamp, s.pitch))
            .collect();
        series.sort_by(|a, b| a.0.total_cmp(&b.0));
        series
    }

    pub fn has_site(&self, site: Site) -> bool {
        self.samples.iter().any(|s| s.site == site)
    }
}

/// Peak forward displacements of one reach: the personaliser's measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachOutcome {
    pub iteration_index: usize,
    /// Trunk (C7) forward displacement, metres.
    pub trunk_disp: f64,
    /// Shoulder (SA) forward displacement, metres.
    pub shoulder_disp: f64,
}

/// Prosthetic elbow range of motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElbowLimits {
    pub min: f64,
    pub max: f64,
}

impl Default for ElbowLimits {
    fn default() -> Self {
        Self { min: 0.0, max: PI }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElbowTrajectory {
    pub angles: Vec<f64>,
    /// Sample indices where the commanded angle hit a joint limit.
    pub clamp_events: Vec<usize>,
}

/// Integrates `elbow_rate = theta * shoulder_rate` (trapezoidal rule) from
/// `initial_elbow` over uniformly spaced rate samples.
pub fn synergy_elbow_trajectory(
    theta: f64,
    shoulder_rate: &[f64],
    dt: f64,
    initial_elbow: f64,
) -> Result<ElbowTrajectory, ImuError> {
    synergy_elbow_trajectory_with_limits(
        theta,
        shoulder_rate,
        dt,
        initial_elbow,
        ElbowLimits::default(),
    )
}

pub fn synergy_elbow_trajectory_with_limits(
    theta: f64,
    shoulder_rate: &[f64],
    dt: f64,
    initial_elbow: f64,
    limits: ElbowLimits,
) -> Result<ElbowTrajectory, ImuError> {
    if shoulder_rate.is_empty() {
        return Err(ImuError::EmptySeries);
    }
    if theta < SYNERGY_RANGE.0 || theta > SYNERGY_RANGE.1 {
        warn!("synergy {theta} outside the usual range {SYNERGY_RANGE:?}");
    }
    let mut angles = Vec::with_capacity(shoulder_rate.len());
    let mut clamp_events = Vec::new();
    let mut integral = 0.0;
    for (i, &rate) in shoulder_rate.iter().enumerate() {
        if i > 0 {
            integral += 0.5 * (shoulder_rate[i - 1] + rate) * dt;
        }
        let raw = initial_elbow + theta * integral;
        let clamped = raw.clamp(limits.min, limits.max);
        if clamped != raw {
            clamp_events.push(i);
        }
        angles.push(clamped);
    }
    Ok(ElbowTrajectory {
        angles,
        clamp_events,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub resample_hz: f64,
    /// Elbow angle assumed at reach onset when no LA sensor is present and
    /// the elbow is reconstructed from the synergy.
    pub initial_elbow: f64,
    /// Fixed C7/SA zero. `None` zeroes each trial on its first sample.
    #[serde(default)]
    pub reference: Option<SensorReference>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            resample_hz: DEFAULT_RESAMPLE_HZ,
            initial_elbow: 1.6,
            reference: None,
        }
    }
}

/// Upright-posture pitches of the trunk-mounted sensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorReference {
    pub c7: f64,
    pub sa: f64,
}

/// C7/SA pitches at the first sample of a trial, for zeroing a whole
/// session on one trial.
pub fn sensor_reference(trial: &ReachTrial) -> Result<SensorReference, ImuError> {
    let first = |site| {
        trial
            .site_series(site)
            .first()
            .map(|&(_, pitch)| pitch)
            .ok_or(ImuError::SiteMissing {
                iteration: trial.iteration_index,
                site,
            })
    };
    Ok(SensorReference {
        c7: first(Site::C7)?,
        sa: first(Site::SA)?,
    })
}

/// Joint angles on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PostureSeries {
    pub times: Vec<f64>,
    pub postures: Vec<Posture>,
}

fn interpolate(series: &[(f64, f64)], t: f64) -> f64 {
    let idx = series.partition_point(|&(ts, _)| ts <= t);
    if idx == 0 {
        return series[0].1;
    }
    if idx >= series.len() {
        return series[series.len() - 1].1;
    }
    let (t0, v0) = series[idx - 1];
    let (t1, v1) = series[idx];
    if t1 == t0 {
        return v1;
    }
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

pub fn joint_angles_from_trial(
    trial: &ReachTrial,
    body: &BodyModel,
) -> Result<PostureSeries, ImuError> {
    joint_angles_from_trial_with(trial, body, &PipelineConfig::default())
}

/// Converts sensor pitches to postures.
///
/// C7 and SA are zeroed on the first grid sample, so a trial is expected to
/// start from an upright, neutral trunk. UA and LA pitches are gravity
/// referenced segment elevations (forward positive, hanging = 0), so
/// shoulder flexion is `UA + trunk_pitch` and elbow flexion `LA - UA`.
pub fn joint_angles_from_trial_with(
    trial: &ReachTrial,
    body: &BodyModel,
    config: &PipelineConfig,
) -> Result<PostureSeries, ImuError> {
    let iteration = trial.iteration_index;
    let mut series = BTreeMap::new();
    for site in [Site::C7, Site::SA, Site::UA] {
        let s = trial.site_series(site);
        if s.len() < 2 {
            return Err(ImuError::SiteMissing { iteration, site });
        }
        series.insert(site, s);
    }
    let lower_arm = trial.site_series(Site::LA);
    if lower_arm.len() >= 2 {
        series.insert(Site::LA, lower_arm);
    }

    let start = series
        .values()
        .map(|s| s[0].0)
        .fold(f64::NEG_INFINITY, f64::max);
    let end = series
        .values()
        .map(|s| s[s.len() - 1].0)
        .fold(f64::INFINITY, f64::min);
    let span = end - start;
    if !(span >= MIN_TRIAL_SPAN_S) {
        return Err(ImuError::DegenerateTrial { iteration, span });
    }

    let dt = 1.0 / config.resample_hz;
    let n = (span * config.resample_hz + 1e-9).floor() as usize + 1;
    let times: Vec<f64> = (0..n).map(|k| start + k as f64 * dt).collect();

    let at = |site: Site, t: f64| interpolate(&series[&site], t);
    let (c7_ref, sa_ref) = match config.reference {
        Some(r) => (r.c7, r.sa),
        None => (at(Site::C7, start), at(Site::SA, start)),
    };

    let mut postures: Vec<Posture> = times
        .iter()
        .map(|&t| {
            let trunk_pitch = at(Site::C7, t) - c7_ref;
            let relative = (at(Site::SA, t) - sa_ref) - trunk_pitch;
            let shoulder_flexion = at(Site::UA, t) + trunk_pitch;
            Posture {
                trunk_pitch,
                shoulder_protraction: body.c7_to_acromion * relative.sin(),
                shoulder_flexion,
                elbow_flexion: 0.0,
            }
        })
        .collect();

    if series.contains_key(&Site::LA) {
        for (p, &t) in postures.iter_mut().zip(&times) {
            p.elbow_flexion = (at(Site::LA, t) - at(Site::UA, t)).clamp(0.0, PI);
        }
    } else {
        // Prosthetic elbow: rebuild from the commanded synergy. Elbow
        // extension follows shoulder flexion, hence the negated rate.
        let flexion: Vec<f64> = postures.iter().map(|p| p.shoulder_flexion).collect();
        let rate = finite_difference(&flexion, dt);
        let negated: Vec<f64> = rate.iter().map(|r| -r).collect();
        let elbow =
            synergy_elbow_trajectory(trial.synergy_value, &negated, dt, config.initial_elbow)?;
        for (p, e) in postures.iter_mut().zip(elbow.angles) {
            p.elbow_flexion = e;
        }
    }

    Ok(PostureSeries { times, postures })
}

fn finite_difference(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let (a, b, span) = if i == 0 {
                (0, 1, dt)
            } else if i == n - 1 {
                (n - 2, n - 1, dt)
            } else {
                (i - 1, i + 1, 2.0 * dt)
            };
            (values[b] - values[a]) / span
        })
        .collect()
}

/// Peak-forward trunk and shoulder displacement over the trial.
pub fn extract_outcome(trial: &ReachTrial, body: &BodyModel) -> Result<ReachOutcome, ImuError> {
    extract_outcome_with(trial, body, &PipelineConfig::default())
}

pub fn extract_outcome_with(
    trial: &ReachTrial,
    body: &BodyModel,
    config: &PipelineConfig,
) -> Result<ReachOutcome, ImuError> {
    let series = joint_angles_from_trial_with(trial, body, config)?;
    let trunk = series
        .postures
        .iter()
        .map(|p| trunk_displacement(body, p))
        .fold(f64::NEG_INFINITY, f64::max);
    let shoulder = series
        .postures
        .iter()
        .map(|p| shoulder_displacement(body, p))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ReachOutcome {
        iteration_index: trial.iteration_index,
        trunk_disp: trunk,
        shoulder_disp: shoulder,
    })
}

/// Constant sensor mounting offsets added by [`synthesize_trial`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MountingOffsets {
    pub c7: f64,
    pub sa: f64,
}

/// Forward sensor model: emits C7/SA/UA (and optionally LA) samples whose
/// pitches reproduce `postures` through [`joint_angles_from_trial`].
pub fn synthesize_trial(
    iteration_index: usize,
    synergy_value: f64,
    times: &[f64],
    postures: &[Posture],
    body: &BodyModel,
    offsets: MountingOffsets,
    include_lower_arm: bool,
) -> ReachTrial {
    let mut samples = Vec::with_capacity(times.len() * 4);
    for (&t, p) in times.iter().zip(postures) {
        let ratio = (p.shoulder_protraction / body.c7_to_acromion).clamp(-1.0, 1.0);
        let upper_arm = upper_arm_elevation(p);
        let mut push = |site, pitch| {
            samples.push(ImuSample {
                timestamp: t,
                site,
                pitch,
                roll: 0.0,
                yaw: 0.0,
            })
        };
        push(Site::C7, p.trunk_pitch + offsets.c7);
        push(Site::SA, p.trunk_pitch + ratio.asin() + offsets.sa);
        push(Site::UA, upper_arm);
        if include_lower_arm {
            push(Site::LA, upper_arm + p.elbow_flexion);
        }
    }
    ReachTrial {
        iteration_index,
        samples,
        synergy_value,
    }
}

fn format_error(line: u64, message: impl Into<String>) -> ImuError {
    ImuError::FormatError {
        line,
        message: message.into(),
    }
}

/// Reads the trial-log CSV, grouping rows into trials by iteration.
pub fn parse_trial_log<R: Read>(reader: R) -> Result<Vec<ReachTrial>, ImuError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = csv.records();
    let header = match records.next() {
        None => return Err(ImuError::EmptyFile),
        Some(r) => r.map_err(|e| format_error(1, e.to_string()))?,
    };
    let names: Vec<&str> = header.iter().collect();
    if names != TRIAL_LOG_HEADER {
        return Err(format_error(
            1,
            format!("expected header {}", TRIAL_LOG_HEADER.join(",")),
        ));
    }

    let mut trials: BTreeMap<usize, ReachTrial> = BTreeMap::new();
    let mut last_time: BTreeMap<(usize, Site), f64> = BTreeMap::new();
    let mut rows = 0usize;
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            format_error(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != TRIAL_LOG_HEADER.len() {
            return Err(format_error(
                line,
                format!("expected 7 fields, found {}", record.len()),
            ));
        }
        let num = |i: usize| -> Result<f64, ImuError> {
            let v: f64 = record[i].parse().map_err(|_| {
                format_error(
                    line,
                    format!("bad {} '{}'", TRIAL_LOG_HEADER[i], &record[i]),
                )
            })?;
            if !v.is_finite() {
                return Err(format_error(
                    line,
                    format!("non-finite {}", TRIAL_LOG_HEADER[i]),
                ));
            }
            Ok(v)
        };
        let iteration: usize = record[0]
            .parse()
            .map_err(|_| format_error(line, format!("bad iteration '{}'", &record[0])))?;
        let site: Site = record[2]
            .parse()
            .map_err(|e: String| format_error(line, e))?;
        let timestamp = num(1)?;
        let pitch = num(3)?;
        if pitch.abs() > PI {
            return Err(format_error(line, "pitch outside [-pi, pi]"));
        }
        let (roll, yaw, theta) = (num(4)?, num(5)?, num(6)?);

        if let Some(&prev) = last_time.get(&(iteration, site)) {
            if timestamp <= prev {
                return Err(format_error(
                    line,
                    format!("{site} timestamp {timestamp} not after {prev}"),
                ));
            }
        }
        last_time.insert((iteration, site), timestamp);

        let trial = trials.entry(iteration).or_insert_with(|| ReachTrial {
            iteration_index: iteration,
            samples: Vec::new(),
            synergy_value: theta,
        });
        if trial.synergy_value != theta {
            return Err(format_error(
                line,
                format!("theta changes within iteration {iteration}"),
            ));
        }
        trial.samples.push(ImuSample {
            timestamp,
            site,
            pitch,
            roll,
            yaw,
        });
        rows += 1;
    }
    if rows == 0 {
        return Err(ImuError::EmptyFile);
    }
    let mut out: Vec<ReachTrial> = trials.into_values().collect();
    for trial in &mut out {
        trial.samples.sort_by(|a, b| {
            a.timestamp
                .total_cmp(&b.timestamp)
                .then(a.site.cmp(&b.site))
        });
    }
    Ok(out)
}

pub fn parse_trial_log_path(path: impl AsRef<Path>) -> Result<Vec<ReachTrial>, ImuError> {
    parse_trial_log(std::fs::File::open(path)?)
}

/// Writes trials in the trial-log CSV format. Floats use the shortest
/// round-trip representation, so parsing the output is lossless.
pub fn write_trial_log<W: Write>(writer: W, trials: &[ReachTrial]) -> Result<(), ImuError> {
    let mut csv = csv::Writer::from_writer(writer);
    let to_io = |e: csv::Error| ImuError::Io(std::io::Error::other(e));
    csv.write_record(TRIAL_LOG_HEADER).map_err(to_io)?;
    for trial in trials {
        for s in &trial.samples {
            csv.write_record(&[
                trial.iteration_index.to_string(),
                s.timestamp.to_string(),
                s.site.to_string(),
                s.pitch.to_string(),
                s.roll.to_string(),
                s.yaw.to_string(),
                trial.synergy_value.to_string(),
            ])
            .map_err(to_io)?;
        }
    }
    csv.flush()?;
    Ok(())
}
