//! Acceptance suite. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero when any criterion fails.

mod common;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synergid::body::{elbow_position, fingertip_position, shoulder_position};
use synergid::harness::{
    run_personalization, summarize_run, PersonalizationProtocol, RunRecord, RunSummary,
};
use synergid::imu::{joint_angles_from_trial, synthesize_trial, MountingOffsets, ReachOutcome};
use synergid::objective::{evaluate_cost, CostSpec};
use synergid::personalizer::{
    PersonalizerConfig, PersonalizerState, DEFAULT_GAIN_CURVATURE_PRODUCT, SYNERGY_BOUNDS,
};
use synergid::subject::{perform_reach, MotorState, SubjectProfile};

use common::{mean, median, oracle_chain, random_body, random_posture, sd, smooth_series};

const MAP_SUBJECTS: [(&str, f64); 3] = [("subject1", 1.99), ("subject2", 1.90), ("subject3", 1.92)];
const THETA_STAR_TOL: f64 = 0.02;
const SWEEP_TIME_LIMIT: Duration = Duration::from_secs(5);

const CONVERGENCE_SUBJECTS: [&str; 3] = ["subject1", "subject2", "subject3"];
const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const THETA_INITS: [f64; 3] = [1.2, 1.6, 2.5];
const STEADY_BY: usize = 40;
const MIN_CONVERGED_FRACTION: f64 = 0.8;
const MAX_MEDIAN_STEADY: f64 = 30.0;
const CONVERGENCE_TIME_LIMIT: Duration = Duration::from_secs(60);

const MAX_FINAL_TRUNK: f64 = 0.05;
const MAX_FINAL_COST: f64 = 2.5e-3;

const MIXED_SUBJECT: &str = "subject2";
const SHOULDER_NOMINAL: f64 = 0.05;
const SHOULDER_TOL: f64 = 0.015;

const MAP_CURVATURES: [f64; 3] = [0.01, 0.1, 1.0];
const MAP_OPTIMA: [f64; 3] = [1.2, 1.9, 2.5];
const STATIC_INIT: f64 = 1.5;
const STATIC_ITERATIONS: usize = 100;
const STATIC_TOL: f64 = 0.05;

const WARMUP_SUBJECT: &str = "subject2";
const PRE_REST_WINDOW: usize = 5;
const WARMUP_RATIO: f64 = 2.0;
const NOISE_WINDOW: usize = 10;
const NOISE_BAND_SDS: f64 = 3.0;
const RECOVERY_WITHIN: usize = 15;

const SWITCH_SUBJECT: &str = "subject9";
const SWITCH_ITERATION: usize = 35;

const KINEMATICS_TOL: f64 = 1e-9;
const ROUND_TRIP_TOL: f64 = 1e-3;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_synergid")
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(bin())
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn fitted_theta_star(dir: &Path, subject: &str) -> Result<f64, String> {
    let out = dir.to_str().unwrap();
    run_cli(&[
        "sweep",
        "--profile",
        subject,
        "--noise",
        "0",
        "--seed",
        "0",
        "--out",
        out,
    ])?;
    let map_csv = dir.join(format!("{subject}_cost_map.csv"));
    run_cli(&[
        "fit-map",
        "--input",
        map_csv.to_str().unwrap(),
        "--out",
        out,
    ])?;
    let sidecar = dir.join(format!("{subject}_cost_map_fit.json"));
    let text =
        std::fs::read_to_string(&sidecar).map_err(|e| format!("{}: {e}", sidecar.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    value["theta_star"]
        .as_f64()
        .ok_or_else(|| "fitted map has no interior minimum".to_string())
}

fn cost_map_recovery() -> Verdict {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut pass = true;
    let mut parts = Vec::new();
    for (subject, expected) in MAP_SUBJECTS {
        let started = Instant::now();
        let result = fitted_theta_star(dir.path(), subject);
        let elapsed = started.elapsed();
        match result {
            Ok(star) => {
                let ok = (star - expected).abs() <= THETA_STAR_TOL && elapsed < SWEEP_TIME_LIMIT;
                pass &= ok;
                parts.push(format!(
                    "{subject} theta*={star:.3} (want {expected}±{THETA_STAR_TOL}) in {:.2}s",
                    elapsed.as_secs_f64()
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{subject} error: {}", e.trim()));
            }
        }
    }
    verdict(pass, parts.join("; "))
}

fn personalization_runs(subjects: &[&str]) -> (Vec<RunRecord>, Duration) {
    let started = Instant::now();
    let mut records = Vec::new();
    for subject in subjects {
        let profile = SubjectProfile::preset(subject).expect("preset");
        for seed in SEEDS {
            for init in THETA_INITS {
                let protocol = PersonalizationProtocol::default().with_theta_init(init);
                records.push(run_personalization(&profile, &protocol, seed).expect("run"));
            }
        }
    }
    (records, started.elapsed())
}

fn converged_by(summary: &RunSummary) -> bool {
    summary
        .steady_state_iteration
        .is_some_and(|i| i <= STEADY_BY)
}

fn convergence_verdict(summaries: &[RunSummary], elapsed: Option<Duration>) -> Verdict {
    let steady: Vec<f64> = summaries
        .iter()
        .filter(|s| converged_by(s))
        .map(|s| s.steady_state_iteration.unwrap() as f64)
        .collect();
    let fraction = steady.len() as f64 / summaries.len() as f64;
    let med = if steady.is_empty() {
        f64::INFINITY
    } else {
        median(&steady)
    };
    let mut pass = fraction >= MIN_CONVERGED_FRACTION && med <= MAX_MEDIAN_STEADY;
    let mut detail = format!(
        "{}/{} runs steady by iteration {STEADY_BY} ({:.0}%, need {:.0}%), median {med} (need <= {MAX_MEDIAN_STEADY})",
        steady.len(),
        summaries.len(),
        100.0 * fraction,
        100.0 * MIN_CONVERGED_FRACTION
    );
    if let Some(elapsed) = elapsed {
        pass &= elapsed < CONVERGENCE_TIME_LIMIT;
        detail.push_str(&format!(", {:.2}s total", elapsed.as_secs_f64()));
    }
    verdict(pass, detail)
}

fn quality_verdict(summaries: &[RunSummary]) -> Verdict {
    let converged: Vec<&RunSummary> = summaries.iter().filter(|s| converged_by(s)).collect();
    if converged.is_empty() {
        return verdict(false, "no converging runs");
    }
    let worst_trunk = converged
        .iter()
        .map(|s| s.final_mean_trunk)
        .fold(f64::MIN, f64::max);
    let worst_cost = converged
        .iter()
        .map(|s| s.final_mean_cost)
        .fold(f64::MIN, f64::max);
    verdict(
        worst_trunk < MAX_FINAL_TRUNK && worst_cost < MAX_FINAL_COST,
        format!(
            "{} converging runs, worst final trunk {worst_trunk:.4} m (< {MAX_FINAL_TRUNK}), worst final cost {worst_cost:.2e} (< {MAX_FINAL_COST:.1e})",
            converged.len()
        ),
    )
}

fn shoulder_persistence(summaries: &[RunSummary]) -> Verdict {
    let shoulders: Vec<f64> = summaries
        .iter()
        .filter(|s| s.profile_id == MIXED_SUBJECT)
        .map(|s| s.final_mean_shoulder)
        .collect();
    let lo = shoulders.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = shoulders.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    verdict(
        !shoulders.is_empty()
            && (lo - SHOULDER_NOMINAL).abs() <= SHOULDER_TOL
            && (hi - SHOULDER_NOMINAL).abs() <= SHOULDER_TOL,
        format!(
            "{MIXED_SUBJECT} final shoulder in [{lo:.4}, {hi:.4}] m over {} runs (want {SHOULDER_NOMINAL}±{SHOULDER_TOL})",
            shoulders.len()
        ),
    )
}

fn static_map_error(curvature: f64, optimum: f64) -> f64 {
    let config = PersonalizerConfig::nominal(STATIC_INIT)
        .with_curvature_gain(curvature, DEFAULT_GAIN_CURVATURE_PRODUCT);
    let mut state = PersonalizerState::init(&config).expect("valid config");
    for _ in 0..STATIC_ITERATIONS {
        let theta = state.next_theta(&config);
        let cost = curvature * (theta - optimum).powi(2);
        state.observe_cost(&config, cost).expect("finite cost");
    }
    (state.theta_hat - optimum).abs()
}

fn optimiser_oracle() -> Verdict {
    let mut worst = (0.0, 0.0, 0.0);
    for c in MAP_CURVATURES {
        for star in MAP_OPTIMA {
            let err = static_map_error(c, star);
            if err >= worst.0 {
                worst = (err, c, star);
            }
        }
    }
    verdict(
        worst.0 < STATIC_TOL,
        format!(
            "9 maps from theta_init {STATIC_INIT}, worst |theta_hat - theta*| = {:.4} at c={}, theta*={} after {STATIC_ITERATIONS} iterations (< {STATIC_TOL})",
            worst.0, worst.1, worst.2
        ),
    )
}

struct WarmupShape {
    ratio: f64,
    recovered_after: Option<usize>,
    monotone: bool,
}

/// Standard deviation of the cost of one reach caused by motor noise `sd`
/// on both displacements, linearised at the measured displacements.
fn cost_noise_sd(spec: &CostSpec, trunk: f64, shoulder: f64, sd: f64) -> f64 {
    let dt = 2.0 * spec.alpha * (trunk - spec.target_trunk);
    let ds = 2.0 * (1.0 - spec.alpha) * (shoulder - spec.target_shoulder);
    sd * dt.hypot(ds)
}

fn warmup_shape(record: &RunRecord, rest: usize, spec: &CostSpec, noise_sd: f64) -> WarmupShape {
    let costs = record.costs();
    let pre = mean(&costs[rest - PRE_REST_WINDOW..rest]);
    let band = NOISE_BAND_SDS * sd(&costs[rest - NOISE_WINDOW..rest]);
    let ratio = costs[rest] / pre;
    let recovered = (rest..=rest + RECOVERY_WITHIN).find(|&j| costs[j] <= pre + band);
    let end = recovered.unwrap_or(rest + RECOVERY_WITHIN);
    let step_sd = |j: usize| {
        let r = &record.rows[j];
        cost_noise_sd(spec, r.trunk_disp_m, r.shoulder_disp_m, noise_sd)
    };
    let monotone = (rest + 1..=end).all(|j| {
        let rise_band = NOISE_BAND_SDS * step_sd(j).hypot(step_sd(j - 1));
        costs[j] <= costs[j - 1] + rise_band
    });
    WarmupShape {
        ratio,
        recovered_after: recovered.map(|j| j - rest),
        monotone,
    }
}

fn warmup_signature() -> Verdict {
    let profile = SubjectProfile::preset(WARMUP_SUBJECT).expect("preset");
    let protocol = PersonalizationProtocol::default();
    let rest = protocol.rest_after.expect("default protocol rests");
    let mut pass = (profile.warmup_decrement - 0.5).abs() < 1e-12;
    let mut parts = vec![format!("{WARMUP_SUBJECT} w={}", profile.warmup_decrement)];
    for seed in SEEDS {
        let record = run_personalization(&profile, &protocol, seed).expect("run");
        let shape = warmup_shape(&record, rest, &protocol.cost_spec, profile.motor_noise_sd);
        let ok = shape.ratio >= WARMUP_RATIO && shape.recovered_after.is_some() && shape.monotone;
        pass &= ok;
        parts.push(format!(
            "seed {seed}: jump {:.2}x, back in band after {}, monotone {}",
            shape.ratio,
            shape
                .recovered_after
                .map_or("never".to_string(), |n| n.to_string()),
            shape.monotone
        ));
    }
    verdict(pass, parts.join("; "))
}

fn switch_robustness() -> Verdict {
    let profile = SubjectProfile::preset(SWITCH_SUBJECT).expect("preset");
    let configured = profile
        .strategy_switch
        .is_some_and(|s| s.iteration == SWITCH_ITERATION);
    if !configured {
        return verdict(
            false,
            format!("{SWITCH_SUBJECT} has no switch at {SWITCH_ITERATION}"),
        );
    }
    let (records, elapsed) = personalization_runs(&[SWITCH_SUBJECT]);
    let switched = records
        .iter()
        .all(|r| r.rows[SWITCH_ITERATION].has_event(synergid::harness::EVENT_SWITCH));
    let summaries: Vec<RunSummary> = records.iter().map(summarize_run).collect();
    let speed = convergence_verdict(&summaries, Some(elapsed));
    let quality = quality_verdict(&summaries);
    verdict(
        switched && speed.pass && quality.pass,
        format!(
            "switch logged {switched}; {}; {}",
            speed.detail, quality.detail
        ),
    )
}

fn kinematics_oracle_error(rng: &mut ChaCha8Rng, n: usize) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..n {
        let body = random_body(rng);
        let posture = random_posture(rng);
        let expected = oracle_chain(&body, &posture);
        let got = [
            shoulder_position(&body, &posture),
            elbow_position(&body, &posture),
            fingertip_position(&body, &posture),
        ];
        for (a, b) in expected.iter().zip(&got) {
            worst = worst.max((a.0 - b.0).abs()).max((a.1 - b.1).abs());
        }
    }
    worst
}

fn round_trip_error(rng: &mut ChaCha8Rng, n: usize) -> f64 {
    let mut worst = 0.0f64;
    let times: Vec<f64> = (0..76).map(|k| k as f64 / 50.0).collect();
    for _ in 0..n {
        let body = random_body(rng);
        let k = [rng.random(), rng.random(), rng.random(), rng.random()];
        let postures = smooth_series(&times, k);
        let offsets = MountingOffsets {
            c7: rng.random_range(-0.1..0.1),
            sa: rng.random_range(-0.1..0.1),
        };
        let trial = synthesize_trial(0, 1.9, &times, &postures, &body, offsets, true);
        let series = joint_angles_from_trial(&trial, &body).expect("valid trial");
        for (a, b) in postures.iter().zip(&series.postures) {
            let prot =
                |p: &synergid::body::Posture| (p.shoulder_protraction / body.c7_to_acromion).asin();
            worst = worst
                .max((a.trunk_pitch - b.trunk_pitch).abs())
                .max((prot(a) - prot(b)).abs())
                .max((a.shoulder_flexion - b.shoulder_flexion).abs())
                .max((a.elbow_flexion - b.elbow_flexion).abs());
        }
    }
    worst
}

fn cost_invariants_hold(rng: &mut ChaCha8Rng, n: usize) -> bool {
    let outcome = |t, s| ReachOutcome {
        iteration_index: 0,
        trunk_disp: t,
        shoulder_disp: s,
    };
    (0..n).all(|_| {
        let spec = CostSpec::new(
            rng.random_range(0.01..0.99),
            rng.random_range(-0.1..0.1),
            rng.random_range(-0.1..0.1),
        )
        .unwrap();
        let (t, s) = (rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
        let j = evaluate_cost(&spec, &outcome(t, s));
        let on_target = evaluate_cost(&spec, &outcome(spec.target_trunk, spec.target_shoulder));
        let half = CostSpec::new(0.5, spec.target_trunk, spec.target_shoulder).unwrap();
        let (dt, ds) = (t - spec.target_trunk, s - spec.target_shoulder);
        let swapped = evaluate_cost(
            &half,
            &outcome(spec.target_trunk + ds, spec.target_shoulder + dt),
        );
        let direct = evaluate_cost(&half, &outcome(t, s));
        j >= 0.0
            && on_target == 0.0
            && (j > 0.0 || (dt == 0.0 && ds == 0.0))
            && (swapped - direct).abs() <= 1e-15
    })
}

fn runs_are_bitwise_identical() -> bool {
    let profile = SubjectProfile::preset("subject9").expect("preset");
    let protocol = PersonalizationProtocol::default();
    let a = run_personalization(&profile, &protocol, 11).expect("run");
    let b = run_personalization(&profile, &protocol, 11).expect("run");
    let bits = |r: &RunRecord| {
        r.rows
            .iter()
            .flat_map(|row| {
                [
                    row.theta_cmd,
                    row.trunk_disp_m,
                    row.shoulder_disp_m,
                    row.cost_m2,
                ]
            })
            .map(f64::to_bits)
            .collect::<Vec<_>>()
    };
    let state = MotorState::new(&profile, 3);
    let (t1, _) = perform_reach(&profile, &state, 1.7);
    let (t2, _) = perform_reach(&profile, &state, 1.7);
    bits(&a) == bits(&b) && a.metadata == b.metadata && t1 == t2
}

fn adversarial_bounds_hold(rng: &mut ChaCha8Rng, runs: usize, steps: usize) -> bool {
    let (lo, hi) = SYNERGY_BOUNDS;
    (0..runs).all(|run| {
        let gain = 10f64.powf(rng.random_range(-3.0..6.0));
        let mut config = PersonalizerConfig::nominal(rng.random_range(lo..=hi));
        config.gain_scale = gain;
        let mut state = PersonalizerState::init(&config).expect("valid config");
        (0..steps).all(|i| {
            let theta = state.next_theta(&config);
            let cost = match (run + i) % 4 {
                0 => rng.random_range(0.0..1e6),
                1 => {
                    if i % 2 == 0 {
                        0.0
                    } else {
                        1e12
                    }
                }
                2 => 1e-300 * rng.random::<f64>(),
                _ => rng.random_range(0.0..1.0) * (theta - 0.8).abs(),
            };
            let before = state.theta_hat;
            match state.observe_cost(&config, cost) {
                Ok(()) => {}
                Err(_) => return state.theta_hat == before,
            }
            (lo..=hi).contains(&theta) && (lo..=hi).contains(&state.theta_hat)
        })
    })
}

fn property_suites() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_613);
    let kin = kinematics_oracle_error(&mut rng, 1000);
    let trip = round_trip_error(&mut rng, 200);
    let cost = cost_invariants_hold(&mut rng, 2000);
    let det = runs_are_bitwise_identical();
    let bounds = adversarial_bounds_hold(&mut rng, 40, 300);
    verdict(
        kin < KINEMATICS_TOL && trip < ROUND_TRIP_TOL && cost && det && bounds,
        format!(
            "kinematics oracle {kin:.1e} m (< {KINEMATICS_TOL:.0e}), pipeline round trip {trip:.1e} rad (< {ROUND_TRIP_TOL:.0e}), cost invariants {cost}, determinism {det}, adversarial bounds {bounds}"
        ),
    )
}

fn main() -> ExitCode {
    let (records, elapsed) = personalization_runs(&CONVERGENCE_SUBJECTS);
    let summaries: Vec<RunSummary> = records.iter().map(summarize_run).collect();

    let results = [
        ("cost-map recovery", cost_map_recovery()),
        (
            "convergence speed",
            convergence_verdict(&summaries, Some(elapsed)),
        ),
        ("steady-state quality", quality_verdict(&summaries)),
        ("shoulder persistence", shoulder_persistence(&summaries)),
        ("optimiser on static maps", optimiser_oracle()),
        ("warm-up decrement", warmup_signature()),
        ("strategy-switch robustness", switch_robustness()),
        ("property suites", property_suites()),
    ];

    let mut failed = 0;
    for (i, (name, v)) in results.iter().enumerate() {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {tag}: {name}: {}", i + 1, v.detail);
        failed += usize::from(!v.pass);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
