//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on configuration errors (the message names
//! the offending field), 1 on runtime errors.

use crate::harness::{
    batch_jobs, default_personalizer_config, read_metadata, read_run_csv, replay, run_batch,
    run_personalization, run_sweep_with_cost, summarize, BatchConfig, HarnessError,
    PersonalizationProtocol, ProtocolKind, ReplayOptions, RunRecord, SensorZeroing, SweepOrder,
    SweepProtocol,
};
use crate::objective::{
    fit_cost_map, read_cost_csv, write_cost_csv, write_sidecar, CostMapSidecar, CostSample,
    CostSpec, MapStatus, ObjectiveError, SynergyCostMap,
};
use crate::personalizer::{PersonalizerConfig, PersonalizerError};
use crate::plot::{emit_plots, PlotError};
use crate::subject::{SubjectError, SubjectProfile};
use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thiserror::Error;

pub const SEED_ENV: &str = "SYNERGID_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "synergid",
    version,
    about = "Simulate and personalise synergy-based prosthetic elbows"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the synergy range and fit the synergy-cost map.
    Sweep(SweepArgs),
    /// Run the closed-loop personalisation protocol.
    Personalize(PersonalizeArgs),
    /// Run profiles × seeds × initial synergies from a config file.
    Batch(BatchArgs),
    /// Recompute displacements and costs from a trial log.
    Replay(ReplayArgs),
    /// Fit a quadratic synergy-cost map to `theta,cost` samples.
    FitMap(FitMapArgs),
    /// Draw SVG figures from a run CSV.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Preset name (subject1..subject9) or path to a JSON/TOML profile.
    #[arg(long)]
    pub profile: String,
    /// Seed of the subject's noise stream.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also write SVG figures.
    #[arg(long)]
    pub plot: bool,
    /// Override the profile's displacement noise (metres).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Trunk weight of the cost, strictly between 0 and 1 (default 0.5).
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Extend the grid to 2.75 (200 reaches).
    #[arg(long)]
    pub extended: bool,
    /// Reaches per synergy value (default 5).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Visit the grid in a seeded random order.
    #[arg(long)]
    pub shuffle: bool,
}

#[derive(Debug, Args)]
pub struct PersonalizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of reaches (default 80).
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Rest before this iteration; 0 disables the rest.
    #[arg(long)]
    pub rest_after: Option<usize>,
    /// Initial synergy (default 1.5).
    #[arg(long)]
    pub theta_init: Option<f64>,
    /// Personaliser config file (JSON or TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// Batch config (JSON or TOML): profiles, seeds, theta_inits and
    /// optional iterations, rest_after, alpha, noise_sd.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also write SVG figures for every run.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Trial log CSV.
    #[arg(long)]
    pub log: PathBuf,
    /// Body measurements to use; defaults to the profile recorded next to
    /// the log, then to typical adult proportions.
    #[arg(long)]
    pub profile: Option<String>,
    /// Trunk weight of the recomputed cost (default 0.5).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Also rerun the personaliser on the recomputed costs.
    #[arg(long)]
    pub reoptimize: bool,
    /// Initial synergy of the rerun personaliser; implies --reoptimize.
    #[arg(long)]
    pub theta_init: Option<f64>,
    /// Zero the trunk sensors once on the first reach instead of per reach.
    #[arg(long)]
    pub session_zero: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also write SVG figures.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct FitMapArgs {
    /// `theta,cost` CSV or a run CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also draw the fitted map.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Run CSV.
    #[arg(long)]
    pub run: PathBuf,
    /// Cost-map sidecar; draws the synergy maps instead of iteration traces.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in {field}: {message}")]
    Config { field: String, message: String },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn config(field: impl Into<String>, message: impl ToString) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.to_string(),
        }
    }

    fn runtime(e: impl ToString) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<SubjectError> for CliError {
    fn from(e: SubjectError) -> Self {
        match &e {
            SubjectError::InvalidProfile { field, .. } => CliError::config(*field, &e),
            _ => CliError::config("profile", &e),
        }
    }
}

impl From<PersonalizerError> for CliError {
    fn from(e: PersonalizerError) -> Self {
        match &e {
            PersonalizerError::InvalidConfig { field, .. } => CliError::config(*field, &e),
            _ => CliError::runtime(e),
        }
    }
}

impl From<ObjectiveError> for CliError {
    fn from(e: ObjectiveError) -> Self {
        match &e {
            ObjectiveError::InvalidAlpha(_) => CliError::config("alpha", &e),
            _ => CliError::runtime(e),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::InvalidProtocol { field, .. } => CliError::config(field, &e),
            HarnessError::Subject(s) => s.into(),
            HarnessError::Personalizer(p) => p.into(),
            HarnessError::Objective(o) => o.into(),
            other => CliError::runtime(other),
        }
    }
}

impl From<PlotError> for CliError {
    fn from(e: PlotError) -> Self {
        CliError::runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::runtime(e)
    }
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Personalize(a) => personalize(a),
        Command::Batch(a) => batch(a),
        Command::Replay(a) => replay_cmd(a),
        Command::FitMap(a) => fit_map(a),
        Command::Plot(a) => plot(a),
    }
}

fn load_profile(common: &CommonArgs) -> Result<SubjectProfile, CliError> {
    let mut profile = SubjectProfile::load(&common.profile)?;
    if let Some(sd) = common.noise {
        profile.motor_noise_sd = sd;
        profile.validate()?;
    }
    Ok(profile)
}

fn cost_spec(alpha: Option<f64>) -> Result<CostSpec, CliError> {
    let spec = CostSpec::zero_targets();
    Ok(match alpha {
        Some(a) => spec.with_alpha(a)?,
        None => spec,
    })
}

fn write_record(
    record: &RunRecord,
    out: &Path,
    stem: &str,
    plot: bool,
    map: Option<&SynergyCostMap>,
) -> Result<(), CliError> {
    let files = record.write(out, stem)?;
    println!("wrote {}", files.csv.display());
    if plot {
        for f in emit_plots(&record.rows, map, out, stem)? {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<(), CliError> {
    let profile = load_profile(&a.common)?;
    let spec = cost_spec(a.common.alpha)?;
    let mut protocol = if a.extended {
        SweepProtocol::extended()
    } else {
        SweepProtocol::default()
    };
    if let Some(reps) = a.reps {
        protocol.reps_per_theta = reps;
    }
    if a.shuffle {
        protocol.order = SweepOrder::Shuffled;
    }
    let (record, map) = run_sweep_with_cost(&profile, &protocol, &spec, a.common.seed)?;
    let stem = format!("{}_sweep", profile.id);
    write_record(&record, &a.common.out, &stem, a.common.plot, Some(&map))?;

    let cost_path = a.common.out.join(format!("{}_cost_map.csv", profile.id));
    write_cost_csv(
        BufWriter::new(File::create(&cost_path)?),
        &record.cost_samples(),
    )?;
    println!("wrote {}", cost_path.display());
    let sidecar = a.common.out.join(format!("{}_cost_map.json", profile.id));
    write_sidecar(BufWriter::new(File::create(&sidecar)?), &map)?;
    print_map(&map);
    Ok(())
}

fn print_map(map: &SynergyCostMap) {
    match map.theta_star {
        Some(star) => println!("theta_star {star:.4} (rmse {:.3e})", map.fit_rmse),
        None => println!("no interior minimum (rmse {:.3e})", map.fit_rmse),
    }
}

fn load_personalizer_config(path: &Path) -> Result<PersonalizerConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
    let config: PersonalizerConfig = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| CliError::config("config", e))?
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::config("config", e))?
    };
    config.validate()?;
    Ok(config)
}

fn personalize(a: PersonalizeArgs) -> Result<(), CliError> {
    let profile = load_profile(&a.common)?;
    let mut protocol = PersonalizationProtocol {
        cost_spec: cost_spec(a.common.alpha)?,
        ..PersonalizationProtocol::default()
    };
    if let Some(path) = &a.config {
        protocol.personalizer_config = load_personalizer_config(path)?;
    }
    if let Some(t) = a.theta_init {
        protocol.personalizer_config.theta_init = t;
    }
    if let Some(n) = a.iterations {
        protocol.total_iterations = n;
        if protocol.rest_after.is_some_and(|r| r >= n) && a.rest_after.is_none() {
            protocol.rest_after = None;
        }
    }
    if let Some(r) = a.rest_after {
        protocol.rest_after = (r > 0).then_some(r);
    }
    let record = run_personalization(&profile, &protocol, a.common.seed)?;
    let stem = format!("{}_personalize_s{}", profile.id, a.common.seed);
    write_record(&record, &a.common.out, &stem, a.common.plot, None)?;
    match record.metadata.steady_state_iteration {
        Some(i) => println!("steady state at iteration {i}"),
        None => println!("no steady state"),
    }
    if let Some(t) = record.metadata.final_theta_hat {
        println!("final theta_hat {t:.4}");
    }
    Ok(())
}

fn batch(a: BatchArgs) -> Result<(), CliError> {
    let config = BatchConfig::from_path(&a.config).map_err(|e| match e {
        HarnessError::Io(io) => CliError::config("config", format!("{}: {io}", a.config.display())),
        HarnessError::Json(j) => CliError::config("config", j),
        HarnessError::FormatError { .. } => CliError::config("config", e),
        other => other.into(),
    })?;
    let jobs = batch_jobs(&config)?;
    let records = run_batch(&jobs)?;
    for record in &records {
        let m = &record.metadata;
        let stem = format!(
            "{}_s{}_init{}",
            m.profile_id,
            m.seed,
            m.theta_init.map_or(String::new(), |t| format!("{t}"))
        );
        write_record(record, &a.out, &stem, a.plot, None)?;
    }
    let summary = summarize(&records)?;
    let path = a.out.join("summary.json");
    serde_json::to_writer_pretty(BufWriter::new(File::create(&path)?), &summary)
        .map_err(CliError::runtime)?;
    println!("wrote {}", path.display());
    let csv_path = a.out.join("summary.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(CliError::runtime)?;
    for run in &summary.runs {
        w.serialize(run).map_err(CliError::runtime)?;
    }
    w.flush()?;
    println!("wrote {}", csv_path.display());
    println!(
        "{} runs, {:.0}% steady, median steady-state iteration {}",
        summary.runs.len(),
        100.0 * summary.converged_fraction,
        summary
            .median_steady_state_iteration
            .map_or("n/a".to_string(), |m| format!("{m}"))
    );
    Ok(())
}

/// `<stem>_trials.csv` → `<stem>.json`.
fn metadata_for_log(log: &Path) -> Option<PathBuf> {
    let name = log.file_name()?.to_str()?;
    let stem = name.strip_suffix("_trials.csv")?;
    Some(log.with_file_name(format!("{stem}.json")))
}

fn replay_profile(a: &ReplayArgs) -> Result<SubjectProfile, CliError> {
    if let Some(p) = &a.profile {
        return Ok(SubjectProfile::load(p)?);
    }
    if let Some(meta) = metadata_for_log(&a.log).filter(|p| p.exists()) {
        let metadata = read_metadata(&meta)?;
        if let Some(profile) = metadata.config.get("profile") {
            let profile: SubjectProfile = serde_json::from_value(profile.clone())
                .map_err(|e| CliError::config("profile", e))?;
            return Ok(profile);
        }
    }
    let mut profile = SubjectProfile::preset("subject1")?;
    profile.body = crate::body::BodyModel::typical();
    profile.id = "replay".into();
    Ok(profile)
}

fn replay_cmd(a: ReplayArgs) -> Result<(), CliError> {
    let profile = replay_profile(&a)?;
    let spec = cost_spec(a.alpha)?;
    let reoptimize = if a.reoptimize || a.theta_init.is_some() {
        Some(default_personalizer_config(a.theta_init.unwrap_or(1.5)))
    } else {
        None
    };
    if let Some(c) = &reoptimize {
        c.validate()?;
    }
    let options = ReplayOptions {
        zeroing: if a.session_zero {
            SensorZeroing::SessionStart
        } else {
            SensorZeroing::PerTrial
        },
        reoptimize,
    };
    let mut record = replay(&a.log, &profile, &spec, &options)?;
    record.trials.clear();
    let stem = format!(
        "{}_replay",
        a.log.file_stem().and_then(|s| s.to_str()).unwrap_or("log")
    );
    write_record(&record, &a.out, &stem, a.plot, None)?;
    println!("replayed {} reaches", record.rows.len());
    Ok(())
}

fn read_samples(path: &Path) -> Result<Vec<CostSample>, CliError> {
    let open = || {
        File::open(path).map_err(|e| CliError::config("input", format!("{}: {e}", path.display())))
    };
    match read_cost_csv(open()?) {
        Ok(s) => Ok(s),
        Err(ObjectiveError::FormatError { line: 1, .. }) => {
            let rows = read_run_csv(open()?)?;
            Ok(rows
                .iter()
                .map(|r| CostSample {
                    theta: r.theta_cmd,
                    cost: r.cost_m2,
                    iteration_index: r.iteration,
                })
                .collect())
        }
        Err(e) => Err(CliError::runtime(e)),
    }
}

fn fit_map(a: FitMapArgs) -> Result<(), CliError> {
    let samples = read_samples(&a.input)?;
    let map = fit_cost_map(&samples)?;
    std::fs::create_dir_all(&a.out)?;
    let stem = a
        .input
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("cost");
    let path = a.out.join(format!("{stem}_fit.json"));
    write_sidecar(BufWriter::new(File::create(&path)?), &map)?;
    println!("wrote {}", path.display());
    if a.plot {
        let rows: Vec<_> = samples
            .iter()
            .map(|s| crate::harness::RunRow {
                iteration: s.iteration_index,
                theta_cmd: s.theta,
                theta_hat: None,
                trunk_disp_m: f64::NAN,
                shoulder_disp_m: f64::NAN,
                cost_m2: s.cost,
                event: String::new(),
            })
            .collect();
        let svg = crate::plot::cost_map_svg(&rows, &map, stem)?;
        let svg_path = a.out.join(format!("{stem}_fit.svg"));
        std::fs::write(&svg_path, svg)?;
        println!("wrote {}", svg_path.display());
    }
    print_map(&map);
    Ok(())
}

fn map_from_sidecar(sidecar: CostMapSidecar, theta_range: (f64, f64)) -> SynergyCostMap {
    SynergyCostMap {
        a2: sidecar.a2,
        a1: sidecar.a1,
        a0: sidecar.a0,
        theta_star: sidecar.theta_star,
        fit_rmse: sidecar.fit_rmse,
        theta_range,
        status: if sidecar.theta_star.is_some() {
            MapStatus::InteriorMinimum
        } else {
            MapStatus::NoInteriorMinimum
        },
    }
}

fn plot(a: PlotArgs) -> Result<(), CliError> {
    let file = File::open(&a.run)
        .map_err(|e| CliError::config("run", format!("{}: {e}", a.run.display())))?;
    let rows = read_run_csv(file)?;
    if rows.is_empty() {
        return Err(PlotError::Empty.into());
    }
    let range = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.theta_cmd), hi.max(r.theta_cmd))
        });
    let map = match &a.map {
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| CliError::config("map", format!("{}: {e}", path.display())))?;
            let sidecar: CostMapSidecar =
                serde_json::from_reader(file).map_err(|e| CliError::config("map", e))?;
            Some(map_from_sidecar(sidecar, range))
        }
        None => {
            let meta = a.run.with_extension("json");
            let is_sweep = meta.exists()
                && read_metadata(&meta).is_ok_and(|m| m.protocol == ProtocolKind::Sweep);
            if is_sweep {
                let samples: Vec<CostSample> = rows
                    .iter()
                    .map(|r| CostSample {
                        theta: r.theta_cmd,
                        cost: r.cost_m2,
                        iteration_index: r.iteration,
                    })
                    .collect();
                Some(fit_cost_map(&samples)?)
            } else {
                None
            }
        }
    };
    let stem = a.run.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    for f in emit_plots(&rows, map.as_ref(), &a.out, stem)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}
