//! Experiment protocols over simulated subjects and replayed logs.

use crate::imu::{
    extract_outcome_with, parse_trial_log_path, sensor_reference, write_trial_log, ImuError,
    PipelineConfig, ReachTrial,
};
use crate::objective::{
    evaluate_cost, fit_cost_map, CostSample, CostSpec, ObjectiveError, SynergyCostMap,
};
use crate::personalizer::{PersonalizerConfig, PersonalizerError, PersonalizerState};
use crate::subject::{
    maybe_strategy_switch, perform_reach, rest_event, MotorState, SubjectError, SubjectProfile,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Expected quadratic coefficient of a subject's cost map, m² per unit
/// theta². Used to scale the personaliser gain when nothing better is known.
pub const POPULATION_CURVATURE: f64 = 0.004;
/// Gain × curvature product and step limit for noisy simulated subjects.
/// Lower than the noise-free default: the displacement noise otherwise
/// keeps `theta_hat` wandering by more than the steady-state tolerance.
pub const SUBJECT_GAIN_CURVATURE_PRODUCT: f64 = 0.02;
pub const SUBJECT_MAX_STEP: f64 = 0.1;
/// Number of trailing iterations summarised as "final".
pub const FINAL_WINDOW: usize = 10;

pub const EVENT_REST: &str = "rest";
pub const EVENT_SWITCH: &str = "switch";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid protocol: {field} {reason}")]
    InvalidProtocol { field: &'static str, reason: String },
    #[error("no runs to summarise")]
    EmptyInput,
    #[error(transparent)]
    Subject(#[from] SubjectError),
    #[error(transparent)]
    Imu(#[from] ImuError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Personalizer(#[from] PersonalizerError),
    #[error("run record line {line}: {message}")]
    FormatError { line: u64, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> HarnessError {
    HarnessError::InvalidProtocol {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SweepOrder {
    #[default]
    Ascending,
    /// Blocks of repetitions in a seeded random order.
    Shuffled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepProtocol {
    pub theta_start: f64,
    pub theta_end: f64,
    pub theta_step: f64,
    pub reps_per_theta: usize,
    #[serde(default)]
    pub order: SweepOrder,
}

impl Default for SweepProtocol {
    fn default() -> Self {
        Self {
            theta_start: 0.8,
            theta_end: 2.7,
            theta_step: 0.05,
            reps_per_theta: 5,
            order: SweepOrder::Ascending,
        }
    }
}

impl SweepProtocol {
    /// Grid extended to 2.75: 40 synergy values, 200 reaches.
    pub fn extended() -> Self {
        Self {
            theta_end: 2.75,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.theta_step > 0.0) {
            return Err(invalid("theta_step", "must be > 0"));
        }
        if !(self.theta_end >= self.theta_start) {
            return Err(invalid("theta_end", "must be >= theta_start"));
        }
        let steps = (self.theta_end - self.theta_start) / self.theta_step;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(invalid(
                "theta_step",
                format!("must divide theta_end - theta_start, got {steps} steps"),
            ));
        }
        if self.reps_per_theta == 0 {
            return Err(invalid("reps_per_theta", "must be >= 1"));
        }
        Ok(())
    }

    pub fn thetas(&self) -> Vec<f64> {
        let steps = ((self.theta_end - self.theta_start) / self.theta_step).round() as usize;
        (0..=steps)
            .map(|k| self.theta_start + k as f64 * self.theta_step)
            .collect()
    }

    pub fn total_iterations(&self) -> usize {
        self.thetas().len() * self.reps_per_theta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonalizationProtocol {
    pub total_iterations: usize,
    /// Rest before this iteration index; `None` disables the rest.
    pub rest_after: Option<usize>,
    pub cost_spec: CostSpec,
    pub personalizer_config: PersonalizerConfig,
}

impl Default for PersonalizationProtocol {
    fn default() -> Self {
        Self {
            total_iterations: 80,
            rest_after: Some(40),
            cost_spec: CostSpec::zero_targets(),
            personalizer_config: default_personalizer_config(1.5),
        }
    }
}

/// Nominal tuning with the gain scaled to [`POPULATION_CURVATURE`].
pub fn default_personalizer_config(theta_init: f64) -> PersonalizerConfig {
    PersonalizerConfig::nominal(theta_init)
        .with_curvature_gain(POPULATION_CURVATURE, SUBJECT_GAIN_CURVATURE_PRODUCT)
        .with_max_step(Some(SUBJECT_MAX_STEP))
}

impl PersonalizationProtocol {
    pub fn with_theta_init(mut self, theta_init: f64) -> Self {
        self.personalizer_config.theta_init = theta_init;
        self
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.total_iterations == 0 {
            return Err(invalid("total_iterations", "must be >= 1"));
        }
        if let Some(r) = self.rest_after {
            if !(r > 0 && r < self.total_iterations) {
                return Err(invalid(
                    "rest_after",
                    format!("must lie in (0, {}), got {r}", self.total_iterations),
                ));
            }
        }
        self.cost_spec.validate()?;
        self.personalizer_config.validate()?;
        Ok(())
    }
}

/// One reach of a run. Serialises to the run CSV columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub iteration: usize,
    pub theta_cmd: f64,
    /// Estimate the command was built from; empty for plain replays.
    pub theta_hat: Option<f64>,
    pub trunk_disp_m: f64,
    pub shoulder_disp_m: f64,
    pub cost_m2: f64,
    /// `;`-separated event markers, empty for none.
    pub event: String,
}

impl RunRow {
    pub fn has_event(&self, name: &str) -> bool {
        self.event.split(';').any(|e| e == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Sweep,
    Personalization,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub profile_id: String,
    pub seed: u64,
    pub protocol: ProtocolKind,
    pub config_hash: String,
    pub theta_init: Option<f64>,
    pub steady_state_iteration: Option<usize>,
    pub final_theta_hat: Option<f64>,
    pub theta_star: Option<f64>,
    /// The full configuration the hash was computed from.
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub rows: Vec<RunRow>,
    pub metadata: RunMetadata,
    /// Raw sensor data of each reach, when available.
    pub trials: Vec<ReachTrial>,
}

/// Paths written by [`RunRecord::write`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunFiles {
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub trial_log: Option<PathBuf>,
}

impl RunRecord {
    pub fn costs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.cost_m2).collect()
    }

    pub fn cost_samples(&self) -> Vec<CostSample> {
        self.rows
            .iter()
            .map(|r| CostSample {
                theta: r.theta_cmd,
                cost: r.cost_m2,
                iteration_index: r.iteration,
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(RUN_HEADER)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<stem>.csv`, `<stem>.json` and, if trials are present,
    /// `<stem>_trials.csv` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<RunFiles, HarnessError> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{stem}.csv"));
        self.write_csv(BufWriter::new(File::create(&csv_path)?))?;
        let meta_path = dir.join(format!("{stem}.json"));
        let mut meta = BufWriter::new(File::create(&meta_path)?);
        serde_json::to_writer_pretty(&mut meta, &self.metadata)?;
        meta.write_all(b"\n")?;
        meta.flush()?;
        let trial_log = if self.trials.is_empty() {
            None
        } else {
            let p = dir.join(format!("{stem}_trials.csv"));
            write_trial_log(BufWriter::new(File::create(&p)?), &self.trials)?;
            Some(p)
        };
        Ok(RunFiles {
            csv: csv_path,
            metadata: meta_path,
            trial_log,
        })
    }
}

pub const RUN_HEADER: [&str; 7] = [
    "iteration",
    "theta_cmd",
    "theta_hat",
    "trunk_disp_m",
    "shoulder_disp_m",
    "cost_m2",
    "event",
];

pub fn read_run_csv<R: Read>(reader: R) -> Result<Vec<RunRow>, HarnessError> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != RUN_HEADER {
        return Err(HarnessError::FormatError {
            line: 1,
            message: format!("expected header {}", RUN_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for result in r.deserialize() {
        let row: RunRow = result.map_err(|e: csv::Error| HarnessError::FormatError {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_metadata(path: &Path) -> Result<RunMetadata, HarnessError> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}

/// SHA-256 of the canonical JSON of a configuration.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String, HarnessError> {
    let json = serde_json::to_vec(config)?;
    Ok(hex::encode(Sha256::digest(&json)))
}

#[derive(Serialize)]
struct SweepConfig<'a> {
    profile: &'a SubjectProfile,
    protocol: &'a SweepProtocol,
}

#[derive(Serialize)]
struct PersonalizationConfig<'a> {
    profile: &'a SubjectProfile,
    protocol: &'a PersonalizationProtocol,
}

fn strategy_event(profile: &SubjectProfile, motor: &mut MotorState, events: &mut Vec<&str>) {
    let switched = maybe_strategy_switch(profile, motor);
    if switched.active_strategy != motor.active_strategy {
        events.push(EVENT_SWITCH);
    }
    *motor = switched;
}

/// Steady-state synergy sweep of a practised subject, fitted to a cost map
/// with zero targets and the default weighting.
pub fn run_sweep(
    profile: &SubjectProfile,
    protocol: &SweepProtocol,
    seed: u64,
) -> Result<(RunRecord, SynergyCostMap), HarnessError> {
    run_sweep_with_cost(profile, protocol, &CostSpec::zero_targets(), seed)
}

pub fn run_sweep_with_cost(
    profile: &SubjectProfile,
    protocol: &SweepProtocol,
    cost_spec: &CostSpec,
    seed: u64,
) -> Result<(RunRecord, SynergyCostMap), HarnessError> {
    profile.validate()?;
    protocol.validate()?;
    cost_spec.validate()?;

    let mut blocks = protocol.thetas();
    if protocol.order == SweepOrder::Shuffled {
        blocks.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_b10c));
    }
    let pipeline = PipelineConfig::default();
    let mut motor = MotorState::trained(profile, seed);
    let mut rows = Vec::with_capacity(protocol.total_iterations());
    let mut trials = Vec::with_capacity(protocol.total_iterations());

    for theta in blocks {
        for _ in 0..protocol.reps_per_theta {
            let mut events = Vec::new();
            strategy_event(profile, &mut motor, &mut events);
            let (trial, next) = perform_reach(profile, &motor, theta);
            motor = next;
            let outcome = extract_outcome_with(&trial, &profile.body, &pipeline)?;
            rows.push(RunRow {
                iteration: outcome.iteration_index,
                theta_cmd: theta,
                theta_hat: Some(theta),
                trunk_disp_m: outcome.trunk_disp,
                shoulder_disp_m: outcome.shoulder_disp,
                cost_m2: evaluate_cost(cost_spec, &outcome),
                event: events.join(";"),
            });
            trials.push(trial);
        }
    }

    let config = SweepConfig { profile, protocol };
    let mut record = RunRecord {
        rows,
        metadata: RunMetadata {
            profile_id: profile.id.clone(),
            seed,
            protocol: ProtocolKind::Sweep,
            config_hash: config_hash(&config)?,
            theta_init: None,
            steady_state_iteration: None,
            final_theta_hat: None,
            theta_star: None,
            config: serde_json::to_value(&config)?,
        },
        trials,
    };
    let map = fit_cost_map(&record.cost_samples())?;
    record.metadata.theta_star = map.theta_star;
    Ok((record, map))
}

/// Closed loop: personaliser, subject, sensor pipeline, cost.
pub fn run_personalization(
    profile: &SubjectProfile,
    protocol: &PersonalizationProtocol,
    seed: u64,
) -> Result<RunRecord, HarnessError> {
    profile.validate()?;
    protocol.validate()?;
    let config = &protocol.personalizer_config;
    let pipeline = PipelineConfig::default();
    let mut optimiser = PersonalizerState::init(config)?;
    let mut motor = MotorState::new(profile, seed);
    let mut rows = Vec::with_capacity(protocol.total_iterations);
    let mut trials = Vec::with_capacity(protocol.total_iterations);
    let mut steady = None;

    for i in 0..protocol.total_iterations {
        let mut events = Vec::new();
        if protocol.rest_after == Some(i) {
            motor = rest_event(profile, &motor);
            events.push(EVENT_REST);
        }
        strategy_event(profile, &mut motor, &mut events);

        let theta_hat = optimiser.theta_hat;
        let theta = optimiser.next_theta(config);
        let (trial, next) = perform_reach(profile, &motor, theta);
        motor = next;
        let outcome = extract_outcome_with(&trial, &profile.body, &pipeline)?;
        let cost = evaluate_cost(&protocol.cost_spec, &outcome);
        optimiser.observe_cost(config, cost)?;
        if steady.is_none() && optimiser.converged {
            steady = Some(i + 1);
        }
        rows.push(RunRow {
            iteration: i,
            theta_cmd: theta,
            theta_hat: Some(theta_hat),
            trunk_disp_m: outcome.trunk_disp,
            shoulder_disp_m: outcome.shoulder_disp,
            cost_m2: cost,
            event: events.join(";"),
        });
        trials.push(trial);
    }

    let hashed = PersonalizationConfig { profile, protocol };
    Ok(RunRecord {
        rows,
        metadata: RunMetadata {
            profile_id: profile.id.clone(),
            seed,
            protocol: ProtocolKind::Personalization,
            config_hash: config_hash(&hashed)?,
            theta_init: Some(config.theta_init),
            steady_state_iteration: steady,
            final_theta_hat: Some(optimiser.theta_hat),
            theta_star: None,
            config: serde_json::to_value(&hashed)?,
        },
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SensorZeroing {
    /// Each reach is zeroed on its own first sample.
    #[default]
    PerTrial,
    /// The whole log is zeroed on the first sample of its first reach.
    SessionStart,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplayOptions {
    pub zeroing: SensorZeroing,
    /// Feed the recomputed costs to a personaliser with this config.
    pub reoptimize: Option<PersonalizerConfig>,
}

/// Recomputes displacements and costs from a trial log.
pub fn replay(
    log_path: &Path,
    profile: &SubjectProfile,
    cost_spec: &CostSpec,
    options: &ReplayOptions,
) -> Result<RunRecord, HarnessError> {
    let trials = parse_trial_log_path(log_path)?;
    replay_trials(trials, profile, cost_spec, options)
}

pub fn replay_trials(
    trials: Vec<ReachTrial>,
    profile: &SubjectProfile,
    cost_spec: &CostSpec,
    options: &ReplayOptions,
) -> Result<RunRecord, HarnessError> {
    cost_spec.validate()?;
    let mut pipeline = PipelineConfig::default();
    if options.zeroing == SensorZeroing::SessionStart {
        if let Some(first) = trials.first() {
            pipeline.reference = Some(sensor_reference(first)?);
        }
    }
    let mut optimiser = match &options.reoptimize {
        Some(c) => Some(PersonalizerState::init(c)?),
        None => None,
    };
    let mut steady = None;
    let mut rows = Vec::with_capacity(trials.len());
    for (k, trial) in trials.iter().enumerate() {
        let outcome = extract_outcome_with(trial, &profile.body, &pipeline)?;
        let cost = evaluate_cost(cost_spec, &outcome);
        let theta_hat = match (&mut optimiser, &options.reoptimize) {
            (Some(state), Some(config)) => {
                let before = state.theta_hat;
                state.observe_cost(config, cost)?;
                if steady.is_none() && state.converged {
                    steady = Some(k + 1);
                }
                Some(before)
            }
            _ => None,
        };
        rows.push(RunRow {
            iteration: trial.iteration_index,
            theta_cmd: trial.synergy_value,
            theta_hat,
            trunk_disp_m: outcome.trunk_disp,
            shoulder_disp_m: outcome.shoulder_disp,
            cost_m2: cost,
            event: String::new(),
        });
    }

    #[derive(Serialize)]
    struct ReplayConfig<'a> {
        profile: &'a SubjectProfile,
        cost_spec: &'a CostSpec,
        zeroing: SensorZeroing,
        reoptimize: &'a Option<PersonalizerConfig>,
    }
    let hashed = ReplayConfig {
        profile,
        cost_spec,
        zeroing: options.zeroing,
        reoptimize: &options.reoptimize,
    };
    Ok(RunRecord {
        rows,
        metadata: RunMetadata {
            profile_id: profile.id.clone(),
            seed: 0,
            protocol: ProtocolKind::Replay,
            config_hash: config_hash(&hashed)?,
            theta_init: options.reoptimize.as_ref().map(|c| c.theta_init),
            steady_state_iteration: steady,
            final_theta_hat: optimiser.map(|s| s.theta_hat),
            theta_star: None,
            config: serde_json::to_value(&hashed)?,
        },
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub profile_id: String,
    pub seed: u64,
    pub theta_init: Option<f64>,
    pub steady_state_iteration: Option<usize>,
    pub converged: bool,
    pub final_theta_hat: Option<f64>,
    pub final_mean_cost: f64,
    pub final_mean_trunk: f64,
    pub final_mean_shoulder: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: Vec<RunSummary>,
    pub converged_fraction: f64,
    pub mean_steady_state_iteration: Option<f64>,
    pub median_steady_state_iteration: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

pub fn summarize_run(record: &RunRecord) -> RunSummary {
    let tail = &record.rows[record.rows.len().saturating_sub(FINAL_WINDOW)..];
    RunSummary {
        profile_id: record.metadata.profile_id.clone(),
        seed: record.metadata.seed,
        theta_init: record.metadata.theta_init,
        steady_state_iteration: record.metadata.steady_state_iteration,
        converged: record.metadata.steady_state_iteration.is_some(),
        final_theta_hat: record.metadata.final_theta_hat,
        final_mean_cost: mean(tail.iter().map(|r| r.cost_m2)),
        final_mean_trunk: mean(tail.iter().map(|r| r.trunk_disp_m)),
        final_mean_shoulder: mean(tail.iter().map(|r| r.shoulder_disp_m)),
    }
}

pub fn summarize(records: &[RunRecord]) -> Result<Summary, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    let runs: Vec<RunSummary> = records.iter().map(summarize_run).collect();
    let mut steady: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.steady_state_iteration.map(|i| i as f64))
        .collect();
    let converged_fraction = steady.len() as f64 / runs.len() as f64;
    let mean_steady = (!steady.is_empty()).then(|| mean(steady.iter().copied()));
    Ok(Summary {
        median_steady_state_iteration: median(&mut steady),
        mean_steady_state_iteration: mean_steady,
        converged_fraction,
        runs,
    })
}

/// Profiles × seeds × initial synergies, each run as an isolated
/// personalisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub profiles: Vec<String>,
    pub seeds: Vec<u64>,
    pub theta_inits: Vec<f64>,
    #[serde(default)]
    pub iterations: Option<usize>,
    #[serde(default)]
    pub rest_after: Option<usize>,
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Overrides every profile's displacement noise.
    #[serde(default)]
    pub noise_sd: Option<f64>,
}

impl BatchConfig {
    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("toml"))
        {
            toml::from_str(&text).map_err(|e| HarnessError::FormatError {
                line: e
                    .span()
                    .map_or(0, |s| text[..s.start].lines().count().max(1) as u64),
                message: e.message().to_string(),
            })
        } else {
            Ok(serde_json::from_str(&text)?)
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.profiles.is_empty() {
            return Err(invalid("profiles", "must not be empty"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "must not be empty"));
        }
        if self.theta_inits.is_empty() {
            return Err(invalid("theta_inits", "must not be empty"));
        }
        Ok(())
    }

    /// Protocol shared by every job, before the initial synergy is set.
    pub fn protocol(&self) -> Result<PersonalizationProtocol, HarnessError> {
        let mut protocol = PersonalizationProtocol::default();
        if let Some(n) = self.iterations {
            protocol.total_iterations = n;
        }
        if let Some(r) = self.rest_after {
            protocol.rest_after = (r > 0).then_some(r);
        }
        if let Some(a) = self.alpha {
            protocol.cost_spec = protocol.cost_spec.with_alpha(a)?;
        }
        Ok(protocol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchJob {
    pub profile: SubjectProfile,
    pub seed: u64,
    pub protocol: PersonalizationProtocol,
}

pub fn batch_jobs(config: &BatchConfig) -> Result<Vec<BatchJob>, HarnessError> {
    config.validate()?;
    let base = config.protocol()?;
    let mut jobs = Vec::new();
    for name in &config.profiles {
        let mut profile = SubjectProfile::load(name)?;
        if let Some(sd) = config.noise_sd {
            profile.motor_noise_sd = sd;
            profile.validate()?;
        }
        for &seed in &config.seeds {
            for &theta_init in &config.theta_inits {
                let protocol = base.clone().with_theta_init(theta_init);
                protocol.validate()?;
                jobs.push(BatchJob {
                    profile: profile.clone(),
                    seed,
                    protocol,
                });
            }
        }
    }
    Ok(jobs)
}

/// Runs jobs in parallel; the output order matches `jobs`.
pub fn run_batch(jobs: &[BatchJob]) -> Result<Vec<RunRecord>, HarnessError> {
    jobs.par_iter()
        .map(|job| run_personalization(&job.profile, &job.protocol, job.seed))
        .collect()
}
