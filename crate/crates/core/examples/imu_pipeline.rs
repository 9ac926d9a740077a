//! Sensor data in, compensation features out: synthesise one reach from a
//! posture trajectory, write it as a trial log, parse it back and extract
//! the peak trunk and shoulder displacement.

use synergid::body::{BodyModel, Posture};
use synergid::imu::{
    extract_outcome, joint_angles_from_trial, parse_trial_log, synthesize_trial, write_trial_log,
    MountingOffsets,
};
use synergid::subject::minimum_jerk;

fn main() -> synergid::Result<()> {
    let body = BodyModel::typical();
    let times: Vec<f64> = (0..=75).map(|k| k as f64 / 50.0).collect();
    let postures: Vec<Posture> = times
        .iter()
        .map(|&t| {
            let s = minimum_jerk(t / 1.5);
            Posture {
                trunk_pitch: 0.12 * s,
                shoulder_protraction: 0.03 * s,
                shoulder_flexion: 0.5 + 1.0 * s,
                elbow_flexion: 1.6 - 1.2 * s,
            }
        })
        .collect();
    let offsets = MountingOffsets {
        c7: 0.05,
        sa: -0.02,
    };
    let trial = synthesize_trial(0, 1.9, &times, &postures, &body, offsets, true);

    let mut log = Vec::new();
    write_trial_log(&mut log, std::slice::from_ref(&trial))?;
    println!("{} bytes of trial log, first lines:", log.len());
    for line in String::from_utf8_lossy(&log).lines().take(5) {
        println!("  {line}");
    }

    let parsed = parse_trial_log(log.as_slice())?;
    let series = joint_angles_from_trial(&parsed[0], &body)?;
    let last = series.postures.last().expect("non-empty series");
    println!(
        "final posture: trunk {:.3} rad, protraction {:.3} m, shoulder {:.3} rad, elbow {:.3} rad",
        last.trunk_pitch, last.shoulder_protraction, last.shoulder_flexion, last.elbow_flexion
    );
    let outcome = extract_outcome(&parsed[0], &body)?;
    println!(
        "peak trunk {:.4} m, peak shoulder {:.4} m",
        outcome.trunk_disp, outcome.shoulder_disp
    );
    Ok(())
}
